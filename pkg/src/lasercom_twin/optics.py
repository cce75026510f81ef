"""Parametric model of the terminal's optical head."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

# Theoretical maximum for a uniformly illuminated circular aperture coupled
# into a matched fundamental fibre mode.
SMF_COUPLING_BASE = 0.81
DEFAULT_WAVELENGTH = 1.55e-6
DEFAULT_BEACON_DIVERGENCE = 1e-3


@dataclass(frozen=True)
class TelescopeSpec:
    """Measured parameters of the 9-cm Cassegrain telescope.

    ``wfe_waves`` is the RMS wavefront error in waves and ``throughput`` the
    total transmission of the telescope (both mirrors, fold mirror and
    collimator).  ``divergence_factor`` scales the diffraction-limited
    transmit divergence ``lambda / D``.
    """

    aperture_m: float = 0.09
    magnification: float = 40.0
    wfe_waves: float = 1.0 / 19.0
    throughput: float = 0.93
    wavelength_m: float = DEFAULT_WAVELENGTH
    divergence_factor: float = 1.0

    def __post_init__(self) -> None:
        if not self.aperture_m > 0:
            raise ConfigError(f"telescope aperture must be > 0 m, got {self.aperture_m}")
        if not self.magnification >= 1:
            raise ConfigError(f"telescope magnification must be >= 1, got {self.magnification}")
        if not self.wfe_waves >= 0:
            raise ConfigError(f"wavefront error must be >= 0 waves, got {self.wfe_waves}")
        if not 0 < self.throughput <= 1:
            raise ConfigError(f"telescope throughput must be in (0, 1], got {self.throughput}")
        if not self.wavelength_m > 0:
            raise ConfigError(f"wavelength must be > 0 m, got {self.wavelength_m}")
        if not self.divergence_factor > 0:
            raise ConfigError(f"divergence factor must be > 0, got {self.divergence_factor}")


@dataclass(frozen=True)
class BeamModel:
    divergence_rad: float
    power_w: float

    def __post_init__(self) -> None:
        if not self.divergence_rad > 0:
            raise ConfigError(f"beam divergence must be > 0 rad, got {self.divergence_rad}")
        if not self.power_w >= 0:
            raise ConfigError(f"beam power must be >= 0 W, got {self.power_w}")


def strehl(wfe_waves: float) -> float:
    """Strehl ratio from RMS wavefront error (Marechal approximation)."""
    if wfe_waves < 0:
        raise ConfigError("wavefront error must be >= 0")
    return math.exp(-((2.0 * math.pi * wfe_waves) ** 2))


def divergence(spec: TelescopeSpec) -> float:
    """1/e^2 half-angle divergence of the transmit beam, radians."""
    return spec.divergence_factor * spec.wavelength_m / spec.aperture_m


def antenna_gain(aperture_m: float, wavelength_m: float) -> float:
    """On-axis gain of a circular aperture, dB."""
    if aperture_m <= 0 or wavelength_m <= 0:
        raise ConfigError("aperture and wavelength must be > 0")
    return 20.0 * math.log10(math.pi * aperture_m / wavelength_m)


def gain_from_divergence(divergence_rad: float) -> float:
    """Gain of a beam with the given half-angle divergence, dB.

    Same convention as :func:`antenna_gain`: a beam of divergence
    ``lambda / D`` has gain ``(pi D / lambda)^2``.
    """
    if divergence_rad <= 0:
        raise ConfigError("divergence must be > 0")
    return 20.0 * math.log10(math.pi / divergence_rad)


def pointing_loss(error_rad: float, divergence_rad: float) -> float:
    """Gaussian-beam loss for a boresight error, dB (<= 0)."""
    if divergence_rad <= 0:
        raise ConfigError("divergence must be > 0")
    if error_rad < 0:
        raise ConfigError("pointing error must be >= 0")
    # 10*log10(exp(-2 x^2)) without the exp underflowing for large x
    return -20.0 * (error_rad / divergence_rad) ** 2 / math.log(10.0)


def coupling_efficiency(strehl_ratio: float, base: float = SMF_COUPLING_BASE) -> float:
    """Single-mode fibre coupling efficiency of an aberrated receive beam."""
    if not 0 < strehl_ratio <= 1 or not 0 < base <= 1:
        raise ConfigError("strehl ratio and coupling base must lie in (0, 1]")
    return base * strehl_ratio
