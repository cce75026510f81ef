"""Exception hierarchy shared by every module."""

from __future__ import annotations


class LasercomError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LasercomError, ValueError):
    """A parameter set violates one of its documented invariants."""


class ScenarioSyntaxError(ConfigError):
    """The scenario text could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class DegenerateGeometryError(LasercomError, ValueError):
    """Two platforms occupy the same point, so no line of sight exists."""


class CalibrationError(LasercomError, ValueError):
    """The amplifier calibration constraints cannot be met."""


class ReportValidationError(LasercomError, ValueError):
    """A link-budget term has the wrong sign or an unknown name."""


class SimulationError(LasercomError, RuntimeError):
    """A module failed part-way through a scenario run."""

    def __init__(self, module: str, step: int, cause: BaseException):
        self.module = module
        self.step = step
        self.cause = cause
        super().__init__(f"{module} failed at step {step}: {cause}")
