"""Thermal derating of the two-stage EDFA.

The case temperature relaxes exponentially towards ``t_env + delta_t_ss``
with time constant ``tau``; output power falls linearly with the temperature
rise above ``t_ref``::

    T(t + dt) = T_target + (T(t) - T_target) * exp(-dt / tau)
    P = max(0, P0 - slope * (T - T_ref))

The update is the exact solution of the first-order ODE, so stepping with
any partition of an interval gives the same end state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from .errors import CalibrationError, ConfigError

# Minimum transmit power the terminal is designed to sustain.
REQUIRED_POWER_W = 2.0


@dataclass(frozen=True)
class EdfaModel:
    """Thermal-power parameters.

    Defaults other than ``p0_w`` are assumptions (the measured temperature
    trace is not available numerically); ``slope_w_per_c`` is normally
    produced by :func:`calibrate`.
    """

    p0_w: float = 2.5
    slope_w_per_c: float = 0.0
    tau_s: float = 1200.0
    delta_t_ss_c: float = 20.0
    t_ref_c: float = 25.0
    t_env_c: float = 25.0

    def __post_init__(self) -> None:
        if not self.p0_w > 0:
            raise ConfigError(f"EDFA initial power must be > 0 W, got {self.p0_w}")
        if not self.tau_s > 0:
            raise ConfigError(f"EDFA thermal time constant must be > 0 s, got {self.tau_s}")
        if not self.slope_w_per_c >= 0:
            raise ConfigError(f"EDFA power-temperature slope must be >= 0, got {self.slope_w_per_c}")

    @property
    def t_target_c(self) -> float:
        return self.t_env_c + self.delta_t_ss_c

    def power_at(self, temperature_c: float) -> float:
        return max(0.0, self.p0_w - self.slope_w_per_c * (temperature_c - self.t_ref_c))


@dataclass(frozen=True)
class EdfaState:
    time_s: float
    temperature_c: float
    power_w: float


def initial_state(model: EdfaModel, t_start_c: float | None = None) -> EdfaState:
    temp = model.t_ref_c if t_start_c is None else float(t_start_c)
    return EdfaState(0.0, temp, model.power_at(temp))


def step(model: EdfaModel, state: EdfaState, dt: float) -> EdfaState:
    """Advance the amplifier by ``dt`` seconds (``dt`` may be ``inf``)."""
    if not dt > 0:
        raise ConfigError(f"EDFA step must be > 0 s, got {dt}")
    target = model.t_target_c
    temp = target + (state.temperature_c - target) * math.exp(-dt / model.tau_s)
    return EdfaState(state.time_s + dt, temp, model.power_at(temp))


def trajectory(
    model: EdfaModel, t_start_c: float, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Temperature and power at each of ``times`` (seconds from switch-on)."""
    t = np.asarray(times, dtype=float)
    target = model.t_target_c
    temp = target + (t_start_c - target) * np.exp(-t / model.tau_s)
    power = np.maximum(0.0, model.p0_w - model.slope_w_per_c * (temp - model.t_ref_c))
    return temp, power


def guarantee(model: EdfaModel, t_start_c: float, duration_s: float) -> float:
    """Minimum output power over ``[0, duration_s]``.

    The power is evaluated on a grid of at most 1 s spacing, each point
    taken straight from switch-on so no rounding accumulates.  The grid is
    also walked with chained :func:`step` calls as a cross-check.  When the
    amplifier starts at or below its steady-state temperature the power is
    monotone, so the minimum must coincide with the end-point value.
    """
    if not duration_s > 0:
        raise ConfigError("guarantee duration must be > 0 s")
    n = max(1, math.ceil(duration_s))
    dt = duration_s / n
    start = initial_state(model, t_start_c)
    lowest = start.power_w
    chained = start
    for k in range(1, n + 1):
        direct = step(model, start, duration_s if k == n else k * dt)
        chained = step(model, chained, dt)
        if abs(direct.power_w - chained.power_w) > 1e-9:
            raise AssertionError(f"chained stepping drifted at {k * dt} s")
        lowest = min(lowest, direct.power_w)
    if t_start_c <= model.t_target_c:
        end = step(model, start, duration_s).power_w
        if abs(lowest - end) > 1e-9:
            raise AssertionError(
                f"stepped minimum {lowest} W disagrees with closed-form end point {end} W"
            )
    return lowest


def thermal_warning(
    model: EdfaModel,
    t_start_c: float,
    duration_s: float,
    required_w: float = REQUIRED_POWER_W,
) -> str | None:
    """Long-link thermal warning text, or None if the power stays above ``required_w``."""
    floor = guarantee(model, t_start_c, duration_s)
    if floor >= required_w:
        return None
    return (
        f"long-link thermal warning: EDFA output falls to {floor:.3f} W "
        f"(< {required_w:g} W) within {duration_s:g} s; additional heat "
        f"transfer is needed for links this long"
    )


@dataclass(frozen=True)
class CalibrationConstraints:
    """Switch-on power and the minimum power required at ``t1_s``."""

    p0_w: float = 2.5
    p_min_w: float = REQUIRED_POWER_W
    t1_s: float = 360.0
    t_start_c: float = 25.0


@dataclass(frozen=True)
class CalibrationResult:
    model: EdfaModel
    margin_w: float
    underdetermined: bool
    free_parameters: tuple[str, ...] = field(default=())


def calibrate(
    constraints: CalibrationConstraints,
    *,
    slope_w_per_c: float | None = None,
    tau_s: float = 1200.0,
    delta_t_ss_c: float = 20.0,
    t_env_c: float = 25.0,
) -> CalibrationResult:
    """Fit the power-temperature slope to the switch-on and end-of-pass powers.

    The reference temperature is the switch-on temperature, so P(0) = P0
    holds by construction.  With ``tau_s`` and ``delta_t_ss_c`` fixed the
    end-of-pass constraint is linear in the slope and is met with equality
    (the largest slope that still satisfies it).  When ``slope_w_per_c`` is
    fixed instead, the constraints are only checked.

    Raises
    ------
    CalibrationError
        If ``p_min_w > p0_w`` or the fixed slope violates the end-of-pass
        constraint.
    """
    c = constraints
    if c.p_min_w > c.p0_w:
        raise CalibrationError(
            f"constraint P(t1) >= {c.p_min_w} W is infeasible: exceeds P(0) = {c.p0_w} W"
        )
    if not c.t1_s > 0:
        raise CalibrationError("constraint time t1 must be > 0 s")
    base = EdfaModel(
        p0_w=c.p0_w,
        slope_w_per_c=0.0,
        tau_s=tau_s,
        delta_t_ss_c=delta_t_ss_c,
        t_ref_c=c.t_start_c,
        t_env_c=t_env_c,
    )
    temp_t1 = step(base, initial_state(base), c.t1_s).temperature_c
    rise = temp_t1 - base.t_ref_c

    if slope_w_per_c is not None:
        model = replace(base, slope_w_per_c=slope_w_per_c)
        p_t1 = step(model, initial_state(model), c.t1_s).power_w
        if p_t1 < c.p_min_w:
            raise CalibrationError(
                f"constraint P({c.t1_s:g} s) >= {c.p_min_w} W violated: model gives {p_t1:.6f} W"
            )
        return CalibrationResult(model, p_t1 - c.p_min_w, underdetermined=True,
                                 free_parameters=("tau_s", "delta_t_ss_c"))

    if rise <= 0.0:
        # the amplifier never heats above switch-on, any slope satisfies P(t1)
        return CalibrationResult(base, c.p0_w - c.p_min_w, underdetermined=True,
                                 free_parameters=("slope_w_per_c",))

    slope = (c.p0_w - c.p_min_w) / rise
    model = replace(base, slope_w_per_c=slope)
    p_t1 = step(model, initial_state(model), c.t1_s).power_w
    # rounding can leave P(t1) a few ulp short of the bound
    while p_t1 < c.p_min_w:
        slope = math.nextafter(slope, 0.0)
        model = replace(base, slope_w_per_c=slope)
        p_t1 = step(model, initial_state(model), c.t1_s).power_w
    return CalibrationResult(model, p_t1 - c.p_min_w, underdetermined=False)


def default_model() -> EdfaModel:
    """Amplifier calibrated to 2.5 W at switch-on and 2 W after a 6-minute pass."""
    return calibrate(CalibrationConstraints()).model


def fit_trace(
    times_s,
    temperatures_c,
    powers_w,
    t_env_c: float = 25.0,
) -> EdfaModel:
    """Least-squares fit of every model parameter to a measured thermal trace.

    Useful when a digitised chamber trace (time, case temperature, output
    power) is available.  The temperature curve fixes ``tau_s`` and
    ``delta_t_ss_c``; a linear regression of power on temperature gives the
    slope, referenced to the first sample.
    """
    t = np.asarray(times_s, dtype=float)
    temp = np.asarray(temperatures_c, dtype=float)
    power = np.asarray(powers_w, dtype=float)
    if not (t.shape == temp.shape == power.shape) or t.size < 3:
        raise CalibrationError("trace needs at least three matching (t, T, P) samples")
    t_start = float(temp[0])

    def resid(x):
        tau, dss = x
        target = t_env_c + dss
        return target + (t_start - target) * np.exp(-(t - t[0]) / tau) - temp

    span = max(float(t[-1] - t[0]), 1.0)
    guess = [span, float(temp[-1] - t_env_c) or 1.0]
    fit = least_squares(resid, guess, bounds=([1e-6, -np.inf], [np.inf, np.inf]))
    tau, dss = map(float, fit.x)
    slope_fit, intercept = np.polyfit(temp - t_start, power, 1)
    return EdfaModel(
        p0_w=float(intercept),
        slope_w_per_c=max(0.0, -float(slope_fit)),
        tau_s=tau,
        delta_t_ss_c=dss,
        t_ref_c=t_start,
        t_env_c=t_env_c,
    )
