"""Itemised optical link budget and modem sensitivity model.

Every term is a power ratio in decibels (``10 log10``).  A report lists the
terms in a fixed canonical order, starting from the transmit power in dBm,
so that the received power is their plain sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import optics
from .constants import PLANCK, SPEED_OF_LIGHT
from .errors import ConfigError, ReportValidationError
from .optics import TelescopeSpec

CANONICAL_TERMS = (
    "tx_power",
    "tx_path_efficiency",
    "tx_antenna_gain",
    "strehl",
    "pointing_loss",
    "free_space_loss",
    "atmospheric_loss",
    "scintillation",
    "rx_antenna_gain",
    "rx_path_efficiency",
    "coupling_efficiency",
)
GAIN_TERMS = frozenset({"tx_antenna_gain", "rx_antenna_gain"})
SIGNED_TERMS = frozenset({"scintillation"})
LEDGER_TOLERANCE_DB = 1e-9

OK = "OK"
UNAVAILABLE = "UNAVAILABLE"


@dataclass(frozen=True)
class ChannelConfig:
    zenith_loss_db: float = 1.0
    scintillation_sigma: float = 0.0
    min_elevation_rad: float = math.radians(5.0)

    def __post_init__(self) -> None:
        if not self.zenith_loss_db >= 0:
            raise ConfigError(f"zenith atmospheric loss must be >= 0 dB, got {self.zenith_loss_db}")
        if not self.scintillation_sigma >= 0:
            raise ConfigError(f"scintillation sigma must be >= 0, got {self.scintillation_sigma}")
        if not -math.pi / 2 <= self.min_elevation_rad <= math.pi / 2:
            raise ConfigError("minimum elevation must lie in [-90, 90] deg")


@dataclass(frozen=True)
class ReceiverSpec:
    """Modem sensitivity expressed as photons per bit at the fibre input."""

    data_rate_bps: float = 1e10
    photons_per_bit: float = 1000.0
    wavelength_m: float = optics.DEFAULT_WAVELENGTH

    def __post_init__(self) -> None:
        if not self.data_rate_bps > 0:
            raise ConfigError(f"data rate must be > 0 bit/s, got {self.data_rate_bps}")
        if not self.photons_per_bit > 0:
            raise ConfigError(f"receiver sensitivity must be > 0 photons/bit, got {self.photons_per_bit}")
        if not self.wavelength_m > 0:
            raise ConfigError("receiver wavelength must be > 0 m")


@dataclass(frozen=True)
class Terminal:
    """One end of the link: telescope, transmit power and lumped path efficiencies.

    The path efficiencies stand in for every passive element between the
    telescope and the fibre (windows, wave plates, splitters, filters).
    """

    telescope: TelescopeSpec = field(default_factory=TelescopeSpec)
    tx_power_w: float = 2.0
    tx_path_efficiency: float = 0.93
    rx_path_efficiency: float = 0.93
    coupling_base: float = optics.SMF_COUPLING_BASE
    beacon_power_w: float = 1.0
    beacon_divergence_rad: float = optics.DEFAULT_BEACON_DIVERGENCE

    def __post_init__(self) -> None:
        if not self.tx_power_w > 0:
            raise ConfigError(f"transmit power must be > 0 W, got {self.tx_power_w}")
        for name in ("tx_path_efficiency", "rx_path_efficiency", "coupling_base"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ConfigError(f"{name} must lie in (0, 1], got {v}")
        if not self.beacon_power_w > 0:
            raise ConfigError("beacon power must be > 0 W")
        if not self.beacon_divergence_rad > 0:
            raise ConfigError("beacon divergence must be > 0 rad")


@dataclass(frozen=True)
class LinkBudgetReport:
    """Ordered dB ledger.  ``terms[0]`` is the transmit power in dBm."""

    terms: tuple[tuple[str, float], ...]
    received_dbm: float | None
    required_dbm: float | None
    margin_db: float | None
    status: str = OK
    reason: str = ""

    @property
    def available(self) -> bool:
        return self.status == OK

    def term(self, name: str) -> float:
        return dict(self.terms)[name]

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "reason": self.reason,
            "terms_db": {k: v for k, v in self.terms},
            "received_dbm": self.received_dbm,
            "required_dbm": self.required_dbm,
            "margin_db": self.margin_db,
        }

    def format(self) -> str:
        lines = [f"status: {self.status}" + (f" ({self.reason})" if self.reason else "")]
        for name, value in self.terms:
            unit = "dBm" if name == "tx_power" else "dB"
            lines.append(f"{name:<22s}{value:+12.4f} {unit}")
        if self.received_dbm is not None:
            lines.append(f"{'received_power':<22s}{self.received_dbm:+12.4f} dBm")
        if self.required_dbm is not None:
            lines.append(f"{'required_power':<22s}{self.required_dbm:+12.4f} dBm")
        if self.margin_db is not None:
            lines.append(f"{'margin':<22s}{self.margin_db:+12.4f} dB")
        return "\n".join(lines)

    @classmethod
    def unavailable(cls, required_dbm: float | None, reason: str) -> "LinkBudgetReport":
        return cls((), None, required_dbm, None, UNAVAILABLE, reason)


def ratio_db(ratio: float) -> float:
    return 10.0 * math.log10(ratio)


def watts_to_dbm(power_w: float) -> float:
    return 10.0 * math.log10(power_w * 1000.0)


def free_space_loss(range_m: float, wavelength_m: float) -> float:
    """Free-space spreading loss ``20 log10(lambda / (4 pi R))``, dB (< 0)."""
    if range_m <= 0 or wavelength_m <= 0:
        raise ConfigError("range and wavelength must be > 0")
    return 20.0 * math.log10(wavelength_m / (4.0 * math.pi * range_m))


def atmospheric_loss(
    cfg: ChannelConfig, elevation_rad: float, crosses_atmosphere: bool
) -> float | None:
    """Airmass-scaled atmospheric loss, dB.

    Returns ``None`` when a path through the atmosphere sits below the
    elevation mask; the caller marks the link unavailable.
    """
    if not crosses_atmosphere:
        return 0.0
    if elevation_rad < cfg.min_elevation_rad:
        return None
    return -cfg.zenith_loss_db / math.sin(elevation_rad)


def photon_energy(wavelength_m: float) -> float:
    return PLANCK * SPEED_OF_LIGHT / wavelength_m


def required_power(rx: ReceiverSpec) -> float:
    """Power needed at the fibre to meet the modem sensitivity, dBm."""
    watts = rx.photons_per_bit * photon_energy(rx.wavelength_m) * rx.data_rate_bps
    return watts_to_dbm(watts)


def _validate_terms(terms: Sequence[tuple[str, float]]) -> None:
    order = {name: i for i, name in enumerate(CANONICAL_TERMS)}
    last = 0
    for name, value in terms:
        if name not in order or name == "tx_power":
            raise ReportValidationError(f"unknown link-budget term {name!r}")
        if order[name] <= last:
            raise ReportValidationError(f"term {name!r} is duplicated or out of canonical order")
        last = order[name]
        if not math.isfinite(value):
            raise ReportValidationError(f"term {name!r} is not finite: {value}")
        if name not in GAIN_TERMS and name not in SIGNED_TERMS and value > 0.0:
            raise ReportValidationError(f"loss term {name!r} is positive ({value} dB)")


def compose(
    tx_power_w: float,
    terms: Iterable[tuple[str, float]],
    rx: ReceiverSpec | float | None,
) -> LinkBudgetReport:
    """Assemble a ledger from the transmit power and ordered dB terms.

    ``rx`` supplies the required power, either as a :class:`ReceiverSpec` or
    directly as a detector threshold in dBm; ``None`` leaves the margin
    undefined.  The dB sum is cross-checked against the product of the
    corresponding linear factors.
    """
    if not tx_power_w > 0:
        raise ReportValidationError(f"transmit power must be > 0 W, got {tx_power_w}")
    terms = tuple((str(k), float(v)) for k, v in terms)
    _validate_terms(terms)
    tx_dbm = watts_to_dbm(tx_power_w)
    received = tx_dbm + math.fsum(v for _, v in terms)

    linear_mw = tx_power_w * 1000.0
    for _, v in terms:
        linear_mw *= 10.0 ** (v / 10.0)
    if linear_mw > 0 and abs(10.0 * math.log10(linear_mw) - received) > LEDGER_TOLERANCE_DB:
        raise ReportValidationError("dB ledger disagrees with the linear-domain product")

    if isinstance(rx, ReceiverSpec):
        required = required_power(rx)
    else:
        required = None if rx is None else float(rx)
    margin = None if required is None else received - required
    return LinkBudgetReport((("tx_power", tx_dbm),) + terms, received, required, margin)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _unit_interval(h: np.ndarray) -> np.ndarray:
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def scintillation_draws(sigma: float, seed: int, times) -> np.ndarray:
    """Vectorised :func:`scintillation_draw`."""
    t = np.atleast_1d(np.asarray(times, dtype=np.float64)) + 0.0
    if sigma < 0:
        raise ConfigError("scintillation sigma must be >= 0")
    if sigma == 0:
        return np.zeros(t.shape)
    key = _splitmix64(np.array([int(seed) % 2**64], dtype=np.uint64))
    h = _splitmix64(key ^ t.view(np.uint64))
    h2 = _splitmix64(h)
    u1 = 1.0 - _unit_interval(h)
    u2 = _unit_interval(h2)
    normal = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    chi = -sigma**2 + sigma * normal  # log-amplitude, E[exp(2 chi)] = 1
    return 20.0 * chi / math.log(10.0)


def scintillation_draw(sigma: float, seed: int, t: float) -> float:
    """Log-normal intensity fade at time ``t``, dB.

    ``sigma`` is the log-amplitude standard deviation.  The intensity factor
    ``10**(x/10)`` has unit mean.  The draw is a stateless hash of
    ``(seed, t)``, so any sample can be regenerated independently.
    """
    return float(scintillation_draws(sigma, seed, [t])[0])


def link_terms(
    tx: Terminal,
    rx: Terminal,
    channel: ChannelConfig,
    range_m: float,
    elevation_rad: float,
    crosses_atmosphere: bool,
    pointing_error_rad: float = 0.0,
    scintillation_db: float = 0.0,
) -> list[tuple[str, float]] | None:
    """Canonical communication-link terms, or None below the elevation mask."""
    atm = atmospheric_loss(channel, elevation_rad, crosses_atmosphere)
    if atm is None:
        return None
    lam = tx.telescope.wavelength_m
    rx_strehl = optics.strehl(rx.telescope.wfe_waves)
    return [
        ("tx_path_efficiency", ratio_db(tx.tx_path_efficiency)),
        ("tx_antenna_gain", optics.antenna_gain(tx.telescope.aperture_m, lam)),
        ("strehl", ratio_db(optics.strehl(tx.telescope.wfe_waves))),
        ("pointing_loss", optics.pointing_loss(pointing_error_rad, optics.divergence(tx.telescope))),
        ("free_space_loss", free_space_loss(range_m, lam)),
        ("atmospheric_loss", atm),
        ("scintillation", scintillation_db),
        ("rx_antenna_gain", optics.antenna_gain(rx.telescope.aperture_m, lam)),
        ("rx_path_efficiency", ratio_db(rx.rx_path_efficiency)),
        ("coupling_efficiency", ratio_db(optics.coupling_efficiency(rx_strehl, rx.coupling_base))),
    ]


def evaluate(
    tx: Terminal,
    rx: Terminal,
    receiver: ReceiverSpec,
    channel: ChannelConfig,
    range_m: float,
    elevation_rad: float,
    crosses_atmosphere: bool,
    pointing_error_rad: float = 0.0,
    scintillation_db: float = 0.0,
    tx_power_w: float | None = None,
) -> LinkBudgetReport:
    """Full communication-link ledger for one instant.

    ``tx_power_w`` overrides the terminal's nominal power (for example with
    the thermally derated amplifier output).
    """
    terms = link_terms(
        tx, rx, channel, range_m, elevation_rad, crosses_atmosphere,
        pointing_error_rad, scintillation_db,
    )
    if terms is None:
        return LinkBudgetReport.unavailable(
            required_power(receiver),
            f"elevation {math.degrees(elevation_rad):.3f} deg below mask",
        )
    power = tx.tx_power_w if tx_power_w is None else tx_power_w
    return compose(power, terms, receiver)


def beacon_budget(
    tx: Terminal,
    rx: Terminal,
    channel: ChannelConfig,
    range_m: float,
    elevation_rad: float,
    crosses_atmosphere: bool,
    threshold_dbm: float | None = None,
    scintillation_db: float = 0.0,
) -> LinkBudgetReport:
    """Ledger of ``tx``'s beacon as seen by ``rx``'s tracking detectors.

    The beacon is a broad beam onto a position-sensitive detector, so the
    ledger has no Strehl, pointing or fibre-coupling terms.
    """
    atm = atmospheric_loss(channel, elevation_rad, crosses_atmosphere)
    if atm is None:
        return LinkBudgetReport.unavailable(
            threshold_dbm, f"elevation {math.degrees(elevation_rad):.3f} deg below mask"
        )
    lam = tx.telescope.wavelength_m
    terms = [
        ("tx_antenna_gain", optics.gain_from_divergence(tx.beacon_divergence_rad)),
        ("free_space_loss", free_space_loss(range_m, lam)),
        ("atmospheric_loss", atm),
        ("scintillation", scintillation_db),
        ("rx_antenna_gain", optics.antenna_gain(rx.telescope.aperture_m, lam)),
        ("rx_path_efficiency", ratio_db(rx.rx_path_efficiency)),
    ]
    return compose(tx.beacon_power_w, terms, threshold_dbm)
