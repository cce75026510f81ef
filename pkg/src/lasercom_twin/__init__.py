"""Digital twin of a small optical communication terminal.

Modules: :mod:`geometry` (orbits, passes, point-ahead), :mod:`optics`
(telescope model), :mod:`amplifier` (EDFA thermal derating),
:mod:`link_budget` (dB ledger and scintillation), :mod:`pat` (pointing,
acquisition and tracking loops), :mod:`scenario` and :mod:`runner`
(scenario files and end-to-end runs), :mod:`cli`.
"""

from .errors import (
    CalibrationError,
    ConfigError,
    DegenerateGeometryError,
    LasercomError,
    ReportValidationError,
    ScenarioSyntaxError,
    SimulationError,
)
from .scenario import ScenarioConfig, ScenarioKind, load_scenario, parse_scenario, serialize
from .runner import RunSummary, run_scenario

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "ConfigError",
    "DegenerateGeometryError",
    "LasercomError",
    "ReportValidationError",
    "ScenarioSyntaxError",
    "SimulationError",
    "ScenarioConfig",
    "ScenarioKind",
    "load_scenario",
    "parse_scenario",
    "serialize",
    "RunSummary",
    "run_scenario",
]
