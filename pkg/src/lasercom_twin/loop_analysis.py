"""Linear frequency-domain analysis of the two PAT loops.

These closed forms describe the tracking loops of :mod:`lasercom_twin.pat`
while no limit is active (no rate limiting, no FPM saturation, no FOV
clipping).  They are derived independently of the time-domain simulation
and serve to design gains and to cross-check it.

Both loops use the PI law ``C(z) = kp + ki T / (1 - z^-1)`` acting on a
position actuator that applies its command one sample later, so the loop
gain is ``L(z) = C(z) z^-1``.
"""

from __future__ import annotations

import math

import numpy as np

from .pat import PatConfig


def loop_gain(kp: float, ki: float, rate_hz: float, z: complex) -> complex:
    T = 1.0 / rate_hz
    return (kp + ki * T / (1.0 - 1.0 / z)) / z


def sensitivity(kp: float, ki: float, rate_hz: float, freq_hz: float) -> complex:
    """Error-to-disturbance transfer ``1 / (1 + L)`` at ``freq_hz``."""
    z = np.exp(2j * math.pi * freq_hz / rate_hz)
    return 1.0 / (1.0 + loop_gain(kp, ki, rate_hz, z))


def closed_loop_poles(kp: float, ki: float, rate_hz: float) -> np.ndarray:
    """Roots of ``z^2 + (kp + ki T - 1) z - kp``."""
    kiT = ki / rate_hz
    return np.roots([1.0, kp + kiT - 1.0, -kp])


def settling_steps(kp: float, ki: float, rate_hz: float, reduction: float) -> int:
    """Samples for the slowest closed-loop mode to decay by ``reduction``."""
    rho = float(np.max(np.abs(closed_loop_poles(kp, ki, rate_hz))))
    if rho >= 1.0:
        raise ValueError("closed loop is not stable")
    return math.ceil(math.log(reduction) / math.log(rho))


def jitter_response(cfg: PatConfig, amplitude: float, freq_hz: float) -> tuple[float, float]:
    """Steady-state residual RMS for a sinusoidal line-of-sight jitter.

    Returns ``(coarse_only, fine)``: the RMS of the receive error with the
    gimbal loop alone and with the fine loop closed around it.

    The gimbal samples the jitter every ``D`` ticks and holds its position,
    so in the tick-rate domain its output is the gimbal response at
    ``freq_hz`` spread over ``D`` images at ``Omega_m = (w Tg + 2 pi m) / D``,
    each weighted by the hold filter ``(1/D) sum_{q=0}^{D-1} e^{j Omega_m q}``.
    The fine loop then filters every image by its own sensitivity.
    """
    D = cfg.divider
    tg = cfg.gimbal_period
    w = 2.0 * math.pi * freq_hz
    zg = np.exp(1j * w * tg)
    lg = loop_gain(cfg.gimbal_kp, cfg.gimbal_ki, cfg.gimbal_rate_hz, zg)
    t_gimbal = lg / (1.0 + lg)
    coarse_power = 0.0
    fine_power = 0.0
    for m in range(D):
        omega = (w * tg + 2.0 * math.pi * m) / D
        hold = np.sum(np.exp(1j * omega * np.arange(D))) / D
        c = -t_gimbal * hold * amplitude
        if m == 0:
            c += amplitude
        z = np.exp(1j * omega)
        s_fine = 1.0 / (1.0 + loop_gain(cfg.fpm_kp, cfg.fpm_ki, cfg.fpm_rate_hz, z))
        coarse_power += abs(c) ** 2 / 2.0
        fine_power += abs(s_fine * c) ** 2 / 2.0
    return math.sqrt(coarse_power), math.sqrt(fine_power)
