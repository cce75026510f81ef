"""Discrete-time pointing, acquisition and tracking (PAT) simulation.

Angles are two-axis small-angle offsets in radians, measured from the
ephemeris-predicted line of sight.  The true line of sight (``los``) is the
prediction error plus platform jitter; the gimbal and fine-pointing mirror
(FPM) try to null it.

Detector and actuator chain at each tick::

    coarse error   e_c = los - gimbal              (wide-FOV C-PSD)
    fine residual  e   = los - gimbal - fpm        (F-PSD, receive boresight)
    transmit error     = e + alpha - pam           (point-ahead mirror)

The gimbal loop runs every ``fpm_rate_hz / gimbal_rate_hz`` ticks on the
coarse measurement; the fine loop runs every tick on the fine measurement.
Both are PI laws with clamped integrators; actuators take the command at
the next tick.  The point-ahead mirror (PAM) only steers the transmit beam.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import optics
from .errors import ConfigError

Vec = tuple[float, float]
ZERO: Vec = (0.0, 0.0)


class Mode(str, enum.Enum):
    IDLE = "IDLE"
    ACQUIRE = "ACQUIRE"
    COARSE_TRACK = "COARSE_TRACK"
    FINE_TRACK = "FINE_TRACK"
    LINKED = "LINKED"
    LOST = "LOST"


TRACKING_MODES = frozenset({Mode.COARSE_TRACK, Mode.FINE_TRACK, Mode.LINKED})


def mode_graph() -> frozenset[tuple[Mode, Mode]]:
    """Every permitted ``(from, to)`` mode transition."""
    edges = {
        (Mode.IDLE, Mode.ACQUIRE),
        (Mode.ACQUIRE, Mode.COARSE_TRACK),
        (Mode.COARSE_TRACK, Mode.FINE_TRACK),
        (Mode.FINE_TRACK, Mode.LINKED),
        (Mode.LINKED, Mode.FINE_TRACK),
        (Mode.FINE_TRACK, Mode.COARSE_TRACK),
        (Mode.LOST, Mode.ACQUIRE),
    }
    edges |= {(m, Mode.LOST) for m in Mode if m is not Mode.LOST}
    return frozenset(edges)


@dataclass(frozen=True)
class PatConfig:
    """Detector, actuator and controller settings.

    None of these values is published for the prototype; every default is an
    engineering assumption.  Gains are for the discrete PI law
    ``u = kp * e + ki * sum(e * T)`` at the respective loop rate.
    """

    coarse_fov_rad: float = math.radians(2.5)
    fine_fov_rad: float = 1e-3
    gimbal_rate_limit_rad_s: float = 0.35  # rad/s per axis
    gimbal_rate_hz: float = 100.0
    gimbal_kp: float = 0.2
    gimbal_ki: float = 20.0  # 1/s
    fpm_range_rad: float = 2e-3
    fpm_rate_hz: float = 1000.0
    fpm_kp: float = 0.05
    fpm_ki: float = 500.0  # 1/s
    coarse_noise_rad: float = 10e-6
    fine_noise_rad: float = 0.5e-6
    handover_dwell: int = 50
    link_threshold_rad: float = 5e-6
    link_window_s: float = 1.0
    beacon_threshold_dbm: float = -90.0
    uncertainty_cone_rad: float = math.radians(5.0)
    spiral_pitch_fraction: float = 0.8
    fine_loop_enabled: bool = True
    point_ahead_enabled: bool = True

    def __post_init__(self) -> None:
        positive = (
            "coarse_fov_rad", "fine_fov_rad", "gimbal_rate_limit_rad_s", "gimbal_rate_hz",
            "gimbal_kp", "gimbal_ki", "fpm_range_rad", "fpm_rate_hz", "fpm_kp", "fpm_ki",
            "link_threshold_rad", "link_window_s", "uncertainty_cone_rad",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"pat.{name} must be > 0, got {getattr(self, name)}")
        if self.coarse_noise_rad < 0 or self.fine_noise_rad < 0:
            raise ConfigError("detector noise must be >= 0 rad")
        if self.handover_dwell < 1:
            raise ConfigError("handover dwell must be >= 1 step")
        if not self.fine_fov_rad < self.coarse_fov_rad:
            raise ConfigError(
                "fine detector FOV must be smaller than the coarse detector FOV "
                f"({self.fine_fov_rad} >= {self.coarse_fov_rad} rad)"
            )
        if not self.fpm_rate_hz >= self.gimbal_rate_hz:
            raise ConfigError("FPM loop rate must be >= gimbal loop rate")
        ratio = self.fpm_rate_hz / self.gimbal_rate_hz
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ConfigError(
                f"gimbal loop rate must divide the FPM loop rate (ratio {ratio})"
            )
        if abs(self.link_window_s * self.gimbal_rate_hz - round(self.link_window_s * self.gimbal_rate_hz)) > 1e-9:
            raise ConfigError("link window must be a whole number of gimbal periods")
        if not 0 < self.spiral_pitch_fraction <= 0.8:
            raise ConfigError("spiral pitch must be at most 0.8 coarse FOV")

    @property
    def divider(self) -> int:
        return round(self.fpm_rate_hz / self.gimbal_rate_hz)

    @property
    def tick(self) -> float:
        return 1.0 / self.fpm_rate_hz

    @property
    def gimbal_period(self) -> float:
        return 1.0 / self.gimbal_rate_hz

    @property
    def spiral_pitch(self) -> float:
        return self.spiral_pitch_fraction * self.coarse_fov_rad

    @property
    def window_blocks(self) -> int:
        return round(self.link_window_s * self.gimbal_rate_hz)


@dataclass(frozen=True)
class Sinusoid:
    amplitude_rad: float
    frequency_hz: float
    phase_rad: float = 0.0
    axis: int = 0

    def __post_init__(self) -> None:
        if self.amplitude_rad < 0 or self.frequency_hz < 0:
            raise ConfigError("sinusoid amplitude and frequency must be >= 0")
        if self.axis not in (0, 1):
            raise ConfigError("sinusoid axis must be 0 or 1")


@dataclass(frozen=True)
class DisturbanceModel:
    """Line-of-sight error seen by the terminal: bias, random walk and tones.

    ``bias_rad`` doubles as the initial pointing error (ephemeris error).
    """

    bias_rad: Vec = ZERO
    random_walk_sigma: float = 0.0  # rad / sqrt(s)
    sinusoids: tuple[Sinusoid, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "bias_rad", tuple(float(b) for b in self.bias_rad))
        object.__setattr__(self, "sinusoids", tuple(self.sinusoids))
        if len(self.bias_rad) != 2:
            raise ConfigError("disturbance bias must have two axes")
        if self.random_walk_sigma < 0:
            raise ConfigError("random-walk sigma must be >= 0")


def sample_disturbance(model: DisturbanceModel, times: np.ndarray) -> np.ndarray:
    """Disturbance at each time, shape (n, 2).  Deterministic in ``model.seed``."""
    t = np.asarray(times, dtype=float)
    out = np.empty((t.size, 2))
    out[:, 0] = model.bias_rad[0]
    out[:, 1] = model.bias_rad[1]
    if model.random_walk_sigma > 0 and t.size > 1:
        rng = np.random.default_rng(model.seed)
        dt = np.diff(t)
        steps = rng.standard_normal((t.size - 1, 2)) * (model.random_walk_sigma * np.sqrt(dt))[:, None]
        out[1:] += np.cumsum(steps, axis=0)
    for s in model.sinusoids:
        out[:, s.axis] += s.amplitude_rad * np.sin(2.0 * math.pi * s.frequency_hz * t + s.phase_rad)
    return out


@dataclass(frozen=True)
class PatState:
    """Snapshot of the PAT chain after a tick.

    ``gimbal`` and ``fpm`` hold the actuator positions that apply at the
    next tick.  ``residual`` is the true receive boresight error observed at
    the tick just simulated.
    """

    mode: Mode = Mode.IDLE
    tick: int = 0
    gimbal: Vec = ZERO
    gimbal_integrator: Vec = ZERO
    fpm: Vec = ZERO
    fpm_integrator: Vec = ZERO
    pam: Vec = ZERO
    coarse_measurement: Vec | None = None
    fine_measurement: Vec | None = None
    residual: Vec = ZERO
    dwell: int = 0
    spiral_center: Vec = ZERO
    spiral_arc: float = 0.0
    spiral_restarts: int = 0
    block_sum: float = 0.0
    block_count: int = 0
    blocks: tuple[float, ...] = ()


def _sub(a: Vec, b: Vec) -> Vec:
    return (a[0] - b[0], a[1] - b[1])


def _add(a: Vec, b: Vec) -> Vec:
    return (a[0] + b[0], a[1] + b[1])


def _norm(a: Vec) -> float:
    return math.hypot(a[0], a[1])


def _clip(x: float, limit: float) -> float:
    return -limit if x < -limit else limit if x > limit else x


def _clip_radial(a: Vec, limit: float) -> Vec:
    r = _norm(a)
    if r <= limit:
        return a
    return (a[0] * limit / r, a[1] * limit / r)


def pi_update(
    error: float, integrator: float, kp: float, ki: float, dt: float, limit: float
) -> tuple[float, float]:
    """One PI update with a clamped integrator; returns ``(output, integrator)``.

    Both the integrator and the output are held within ``+-limit``, so the
    controller leaves saturation as soon as the error reverses.
    """
    integrator = _clip(integrator + ki * dt * error, limit)
    return _clip(kp * error + integrator, limit), integrator


# -- acquisition ------------------------------------------------------------


def _spiral_b(cfg: PatConfig) -> float:
    return cfg.spiral_pitch / (2.0 * math.pi)


def _arc_length(phi: float, b: float) -> float:
    return 0.5 * b * (phi * math.sqrt(1.0 + phi * phi) + math.asinh(phi))


def spiral_length(cfg: PatConfig) -> float:
    """Arc length of the Archimedean scan spiral out to the uncertainty cone."""
    b = _spiral_b(cfg)
    return _arc_length(cfg.uncertainty_cone_rad / b, b)


def _phi_at(arc: float, b: float, guess: float) -> float:
    phi = max(guess, 0.0)
    for _ in range(60):
        f = _arc_length(phi, b) - arc
        nxt = max(0.0, phi - f / (b * math.sqrt(1.0 + phi * phi)))
        if abs(nxt - phi) <= 1e-15 * max(1.0, phi):
            return nxt
        phi = nxt
    return phi


def spiral_offset(cfg: PatConfig, arc: float) -> Vec:
    """Scan position at arc length ``arc`` along the spiral ``r = b * phi``."""
    b = _spiral_b(cfg)
    phi = _phi_at(arc, b, arc / b if arc < b else math.sqrt(2.0 * arc / b))
    r = b * phi
    return (r * math.cos(phi), r * math.sin(phi))


def acquisition_step_bound(cfg: PatConfig) -> int:
    """Gimbal steps needed to sweep the whole spiral once at the rate limit."""
    step = cfg.gimbal_rate_limit_rad_s * cfg.gimbal_period
    return math.ceil(spiral_length(cfg) / step) + 1


def _enter_acquire(state: PatState, feedforward: Vec) -> PatState:
    return replace(
        state,
        mode=Mode.ACQUIRE,
        spiral_center=_sub(state.gimbal, feedforward),
        spiral_arc=0.0,
        fpm=ZERO,
        fpm_integrator=ZERO,
        gimbal_integrator=ZERO,
        dwell=0,
    )


def acquire_step(
    state: PatState,
    cfg: PatConfig,
    los: Vec,
    beacon_dbm: float,
    dt: float,
    feedforward: Vec = ZERO,
) -> PatState:
    """One gimbal period of spiral search.

    The beacon is detected when the true error is inside the coarse FOV and
    the received beacon power reaches the detector threshold; the terminal
    then enters COARSE_TRACK with its gimbal integrator primed for a
    bumpless hand-over.  Otherwise the gimbal advances along the spiral by
    ``rate_limit * dt`` of arc length, restarting from the centre once the
    uncertainty cone has been covered.
    """
    if state.mode is not Mode.ACQUIRE:
        raise ValueError(f"acquire_step needs mode ACQUIRE, not {state.mode.value}")
    g = state.gimbal
    err = _sub(los, g)
    residual = _sub(err, state.fpm)
    if _norm(err) < cfg.coarse_fov_rad and beacon_dbm >= cfg.beacon_threshold_dbm:
        return replace(
            state,
            mode=Mode.COARSE_TRACK,
            tick=state.tick + 1,
            gimbal_integrator=_sub(g, feedforward),
            residual=residual,
            coarse_measurement=None,
            fine_measurement=None,
            dwell=0,
        )
    arc = state.spiral_arc + cfg.gimbal_rate_limit_rad_s * dt
    restarts = state.spiral_restarts
    if arc > spiral_length(cfg):
        arc = 0.0
        restarts += 1
    target = _add(_add(feedforward, state.spiral_center), spiral_offset(cfg, arc))
    lim = cfg.gimbal_rate_limit_rad_s * dt
    new_g = (
        g[0] + _clip(target[0] - g[0], lim),
        g[1] + _clip(target[1] - g[1], lim),
    )
    return replace(
        state,
        tick=state.tick + 1,
        gimbal=new_g,
        residual=residual,
        spiral_arc=arc,
        spiral_restarts=restarts,
        coarse_measurement=None,
        fine_measurement=None,
    )


# -- tracking ---------------------------------------------------------------


def _check_tick(cfg: PatConfig, dt: float) -> None:
    if abs(dt * cfg.fpm_rate_hz - 1.0) > 1e-9:
        raise ConfigError(
            f"tracking step {dt} s is not the FPM tick 1/{cfg.fpm_rate_hz:g} Hz"
        )


def track_step(
    state: PatState,
    cfg: PatConfig,
    los: Vec,
    alpha: Vec,
    dt: float,
    feedforward: Vec = ZERO,
    noise: tuple[Vec, Vec] = (ZERO, ZERO),
) -> PatState:
    """One FPM tick of closed-loop tracking.

    ``los`` is the true line of sight (prediction error plus jitter),
    ``alpha`` the commanded point-ahead offset, ``noise`` the additive
    (coarse, fine) detector noise for this tick.
    """
    if state.mode not in TRACKING_MODES:
        raise ValueError(f"track_step needs a tracking mode, not {state.mode.value}")
    _check_tick(cfg, dt)
    g, f = state.gimbal, state.fpm
    coarse_err = _sub(los, g)
    residual = _sub(coarse_err, f)
    pam = alpha if cfg.point_ahead_enabled else ZERO
    tick = state.tick + 1

    if _norm(coarse_err) > cfg.coarse_fov_rad:
        return replace(
            state, mode=Mode.LOST, tick=tick, residual=residual, pam=pam,
            fpm=ZERO, fpm_integrator=ZERO, coarse_measurement=None,
            fine_measurement=None, dwell=0,
        )

    m_c = _clip_radial(_add(coarse_err, noise[0]), cfg.coarse_fov_rad)
    fine_visible = _norm(residual) < cfg.fine_fov_rad
    m_f = _clip_radial(_add(residual, noise[1]), cfg.fine_fov_rad) if fine_visible else None

    mode, dwell = state.mode, state.dwell
    block_sum, block_count, blocks = state.block_sum, state.block_count, state.blocks
    fpm, fpm_i = f, state.fpm_integrator

    if mode is Mode.COARSE_TRACK:
        if cfg.fine_loop_enabled and _norm(m_c) < cfg.fine_fov_rad:
            dwell += 1
        else:
            dwell = 0
        if dwell >= cfg.handover_dwell and m_f is not None:
            mode, dwell = Mode.FINE_TRACK, 0
            block_sum, block_count, blocks = 0.0, 0, ()
    elif m_f is None:
        # spot left the fine detector
        if mode is Mode.LINKED:
            mode = Mode.FINE_TRACK
        else:
            mode, dwell = Mode.COARSE_TRACK, 0
            fpm, fpm_i = ZERO, ZERO

    if mode in (Mode.FINE_TRACK, Mode.LINKED) and m_f is not None:
        ux, ix = pi_update(m_f[0], fpm_i[0], cfg.fpm_kp, cfg.fpm_ki, dt, cfg.fpm_range_rad)
        uy, iy = pi_update(m_f[1], fpm_i[1], cfg.fpm_kp, cfg.fpm_ki, dt, cfg.fpm_range_rad)
        fpm, fpm_i = (ux, uy), (ix, iy)
        block_sum += m_f[0] * m_f[0] + m_f[1] * m_f[1]
        block_count += 1
        if block_count == cfg.divider:
            blocks = (blocks + (block_sum,))[-cfg.window_blocks:]
            block_sum, block_count = 0.0, 0
            if len(blocks) == cfg.window_blocks:
                rms = math.sqrt(sum(blocks) / (cfg.window_blocks * cfg.divider))
                if mode is Mode.FINE_TRACK and rms < cfg.link_threshold_rad:
                    mode = Mode.LINKED
                elif mode is Mode.LINKED and rms >= cfg.link_threshold_rad:
                    mode = Mode.FINE_TRACK
    elif mode is Mode.COARSE_TRACK:
        fpm, fpm_i = ZERO, ZERO
        block_sum, block_count, blocks = 0.0, 0, ()

    gimbal, gimbal_i = g, state.gimbal_integrator
    if state.tick % cfg.divider == 0:
        tg = cfg.gimbal_period
        lim = cfg.gimbal_rate_limit_rad_s * tg
        new_g, new_i = [], []
        for axis in (0, 1):
            integ = gimbal_i[axis] + cfg.gimbal_ki * tg * m_c[axis]
            cmd = feedforward[axis] + cfg.gimbal_kp * m_c[axis] + integ
            move = cmd - g[axis]
            if abs(move) > lim:
                # rate-limited: hold the integrator (conditional integration)
                move = _clip(move, lim)
                integ = gimbal_i[axis]
            new_g.append(g[axis] + move)
            new_i.append(integ)
        gimbal, gimbal_i = (new_g[0], new_g[1]), (new_i[0], new_i[1])

    return replace(
        state,
        mode=mode,
        tick=tick,
        gimbal=gimbal,
        gimbal_integrator=gimbal_i,
        fpm=fpm,
        fpm_integrator=fpm_i,
        pam=pam,
        coarse_measurement=m_c,
        fine_measurement=m_f,
        residual=residual,
        dwell=dwell,
        block_sum=block_sum,
        block_count=block_count,
        blocks=blocks,
    )


def _hold_step(state: PatState, los: Vec) -> PatState:
    return replace(state, tick=state.tick + 1, residual=_sub(_sub(los, state.gimbal), state.fpm))


# -- full run ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PatTimeSeries:
    """Per-tick record of a PAT run."""

    t: np.ndarray
    mode: tuple[Mode, ...]
    gimbal: np.ndarray
    fpm: np.ndarray
    pam: np.ndarray
    residual: np.ndarray
    residual_rad: np.ndarray
    tx_error_rad: np.ndarray
    pointing_loss_db: np.ndarray
    spiral_restarts: int = 0
    final_state: PatState = field(default_factory=PatState, repr=False)

    def transitions(self) -> list[tuple[int, Mode, Mode]]:
        """``(tick, from, to)`` for every mode change, starting from IDLE."""
        out = []
        prev = Mode.IDLE
        for k, m in enumerate(self.mode):
            if m is not prev:
                out.append((k, prev, m))
            prev = m
        return out

    def first_time_in(self, mode: Mode) -> float | None:
        for k, m in enumerate(self.mode):
            if m is mode:
                return float(self.t[k])
        return None

    def to_bytes(self) -> bytes:
        """Canonical byte serialisation, used to check determinism."""
        parts = [
            self.t.tobytes(),
            ",".join(m.value for m in self.mode).encode(),
            self.gimbal.tobytes(),
            self.fpm.tobytes(),
            self.pam.tobytes(),
            self.residual.tobytes(),
            self.tx_error_rad.tobytes(),
            self.pointing_loss_db.tobytes(),
        ]
        return b"|".join(parts)


def _as_source(value, default: Vec) -> Callable[[float], Vec]:
    if value is None:
        return lambda t: default
    if callable(value):
        return value
    const = (float(value[0]), float(value[1]))
    return lambda t: const


def run(
    cfg: PatConfig,
    disturbance: DisturbanceModel,
    seed: int,
    duration: float,
    dt: float,
    *,
    alpha=None,
    beacon_dbm=None,
    feedforward=None,
    divergence_rad: float | None = None,
) -> PatTimeSeries:
    """Simulate the PAT chain from IDLE for ``duration`` seconds.

    Parameters
    ----------
    cfg : PatConfig
    disturbance : DisturbanceModel
        Line-of-sight error (its ``seed`` drives the random walk).
    seed : int
        Seed for detector noise.
    duration, dt : float
        Run length and tick; ``dt`` must equal ``1 / cfg.fpm_rate_hz``.
    alpha : callable or pair, optional
        Point-ahead command ``t -> (x, y)``; zero if omitted.
    beacon_dbm : callable or float, optional
        Beacon power at the detectors; always above threshold if omitted.
    feedforward : callable or pair, optional
        Ephemeris pointing added to the gimbal command; zero if omitted.
    divergence_rad : float, optional
        Transmit divergence for the pointing loss; defaults to the 9-cm
        telescope's diffraction limit.

    The output is a pure function of the arguments.
    """
    _check_tick(cfg, dt)
    if not duration > 0:
        raise ConfigError("PAT run duration must be > 0 s")
    n = int(round(duration / dt))
    if divergence_rad is None:
        divergence_rad = optics.divergence(optics.TelescopeSpec())
    alpha_at = _as_source(alpha, ZERO)
    ff_at = _as_source(feedforward, ZERO)
    if beacon_dbm is None:
        beacon_at = lambda t: math.inf  # noqa: E731
    elif callable(beacon_dbm):
        beacon_at = beacon_dbm
    else:
        beacon_at = lambda t, b=float(beacon_dbm): b  # noqa: E731

    times = np.arange(n) * dt
    dist = sample_disturbance(disturbance, times)
    rng = np.random.default_rng(seed)
    coarse_noise = rng.standard_normal((n, 2)) * cfg.coarse_noise_rad
    fine_noise = rng.standard_normal((n, 2)) * cfg.fine_noise_rad

    gimbal = np.empty((n, 2))
    fpm = np.empty((n, 2))
    pam = np.empty((n, 2))
    residual = np.empty((n, 2))
    tx_err = np.empty(n)
    modes: list[Mode] = []

    state = PatState()
    for k in range(n):
        t = float(times[k])
        ff = ff_at(t)
        los = (ff[0] + float(dist[k, 0]), ff[1] + float(dist[k, 1]))
        a = alpha_at(t)
        mode = state.mode
        if mode is Mode.IDLE:
            state = replace(_enter_acquire(state, ff), tick=state.tick + 1,
                            residual=_sub(_sub(los, state.gimbal), state.fpm))
        elif mode is Mode.LOST:
            state = replace(_enter_acquire(state, ff), tick=state.tick + 1,
                            residual=_sub(_sub(los, state.gimbal), state.fpm))
        elif mode is Mode.ACQUIRE:
            if state.tick % cfg.divider == 0:
                state = acquire_step(state, cfg, los, beacon_at(t), cfg.gimbal_period, ff)
            else:
                state = _hold_step(state, los)
        else:
            noise = (
                (float(coarse_noise[k, 0]), float(coarse_noise[k, 1])),
                (float(fine_noise[k, 0]), float(fine_noise[k, 1])),
            )
            state = track_step(state, cfg, los, a, dt, ff, noise)
        modes.append(state.mode)
        residual[k] = state.residual
        gimbal[k] = state.gimbal
        fpm[k] = state.fpm
        pam[k] = state.pam
        ex = state.residual[0] + a[0] - state.pam[0]
        ey = state.residual[1] + a[1] - state.pam[1]
        tx_err[k] = math.hypot(ex, ey)

    residual_rad = np.hypot(residual[:, 0], residual[:, 1])
    loss = np.array([optics.pointing_loss(e, divergence_rad) for e in tx_err])
    return PatTimeSeries(
        t=times,
        mode=tuple(modes),
        gimbal=gimbal,
        fpm=fpm,
        pam=pam,
        residual=residual,
        residual_rad=residual_rad,
        tx_error_rad=tx_err,
        pointing_loss_db=loss,
        spiral_restarts=state.spiral_restarts,
        final_state=state,
    )
