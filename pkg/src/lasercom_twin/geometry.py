"""Platform kinematics and inter-platform link geometry.

All positions and velocities are expressed in an Earth-centred frame whose
axes coincide with the Earth-fixed frame at t = 0.  With the default
non-rotating Earth that frame is Earth-fixed for all time; with
``rotating_earth=True`` it is inertial and ground sites, HAPS, drones and GEO
satellites are carried around the polar axis at the sidereal rate.

The Earth is a sphere of radius :data:`~lasercom_twin.constants.EARTH_RADIUS`.
Orbits are circular and unperturbed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .constants import (
    EARTH_MU,
    EARTH_RADIUS,
    EARTH_ROTATION_RATE,
    GEO_ALTITUDE,
    SPEED_OF_LIGHT,
)
from .errors import ConfigError, DegenerateGeometryError

LEO_ALTITUDE_RANGE = (200e3, 2000e3)
HAPS_ALTITUDE_RANGE = (15e3, 25e3)
# Assumed when no altitude is given; no reference mission altitude is published.
DEFAULT_LEO_ALTITUDE = 400e3
DEFAULT_HAPS_ALTITUDE = 20e3


class PlatformKind(str, enum.Enum):
    GROUND_SITE = "GROUND_SITE"
    HAPS = "HAPS"
    DRONE = "DRONE"
    LEO_CIRCULAR = "LEO_CIRCULAR"
    GEO = "GEO"


_DEFAULT_ALTITUDE = {
    PlatformKind.GROUND_SITE: 0.0,
    PlatformKind.DRONE: 0.0,
    PlatformKind.HAPS: DEFAULT_HAPS_ALTITUDE,
    PlatformKind.LEO_CIRCULAR: DEFAULT_LEO_ALTITUDE,
    PlatformKind.GEO: GEO_ALTITUDE,
}


@dataclass(frozen=True)
class PlatformSpec:
    """Static description of one platform.

    ``latitude_deg``/``longitude_deg`` locate ground sites, HAPS and hovering
    drones (for GEO only the longitude is used, as the sub-satellite point).
    ``inclination_deg``, ``raan_deg`` and ``phase_deg`` (argument of latitude
    at t = 0) describe a circular LEO.  ``waypoints`` is a sequence of
    ``(t_s, lat_deg, lon_deg)`` triples flown piecewise-linearly by a drone
    at fixed ``altitude_m``.

    ``altitude_m=None`` selects the per-kind default (0 m for ground and
    drone, 20 km HAPS, 400 km LEO, 35 786 km GEO).
    """

    kind: PlatformKind
    latitude_deg: float = 0.0
    longitude_deg: float = 0.0
    altitude_m: float | None = None
    inclination_deg: float = 0.0
    raan_deg: float = 0.0
    phase_deg: float = 0.0
    waypoints: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self) -> None:
        kind = PlatformKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.altitude_m is None:
            object.__setattr__(self, "altitude_m", _DEFAULT_ALTITUDE[kind])
        object.__setattr__(
            self, "waypoints", tuple(tuple(float(v) for v in w) for w in self.waypoints)
        )
        _validate(self)

    @classmethod
    def ground(cls, latitude_deg: float, longitude_deg: float, altitude_m: float = 0.0):
        return cls(PlatformKind.GROUND_SITE, latitude_deg, longitude_deg, altitude_m)

    @classmethod
    def haps(cls, latitude_deg: float, longitude_deg: float, altitude_m: float = DEFAULT_HAPS_ALTITUDE):
        return cls(PlatformKind.HAPS, latitude_deg, longitude_deg, altitude_m)

    @classmethod
    def drone(cls, waypoints, altitude_m: float = 100.0):
        lat, lon = (waypoints[0][1], waypoints[0][2]) if waypoints else (0.0, 0.0)
        return cls(PlatformKind.DRONE, lat, lon, altitude_m, waypoints=tuple(waypoints))

    @classmethod
    def leo(
        cls,
        altitude_m: float = DEFAULT_LEO_ALTITUDE,
        inclination_deg: float = 0.0,
        raan_deg: float = 0.0,
        phase_deg: float = 0.0,
    ):
        return cls(
            PlatformKind.LEO_CIRCULAR,
            altitude_m=altitude_m,
            inclination_deg=inclination_deg,
            raan_deg=raan_deg,
            phase_deg=phase_deg,
        )

    @classmethod
    def geo(cls, longitude_deg: float):
        return cls(PlatformKind.GEO, longitude_deg=longitude_deg)

    @property
    def orbit_radius(self) -> float:
        return EARTH_RADIUS + self.altitude_m

    @property
    def mean_motion(self) -> float:
        """Angular rate of a circular orbit at this altitude, rad/s."""
        return math.sqrt(EARTH_MU / self.orbit_radius**3)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.mean_motion


def _validate(spec: PlatformSpec) -> None:
    kind, h = spec.kind, spec.altitude_m
    if not math.isfinite(h) or h < 0:
        raise ConfigError(f"{kind.value}: altitude must be >= 0 m, got {h}")
    if not -90.0 <= spec.latitude_deg <= 90.0:
        raise ConfigError(f"{kind.value}: latitude {spec.latitude_deg} outside [-90, 90] deg")
    if not -180.0 <= spec.longitude_deg < 180.0:
        raise ConfigError(f"{kind.value}: longitude {spec.longitude_deg} outside [-180, 180) deg")
    if kind is PlatformKind.LEO_CIRCULAR:
        lo, hi = LEO_ALTITUDE_RANGE
        if not lo <= h <= hi:
            raise ConfigError(f"LEO altitude {h} m outside [{lo:.0f}, {hi:.0f}] m")
    elif kind is PlatformKind.GEO:
        if abs(h - GEO_ALTITUDE) > 1.0:
            raise ConfigError(f"GEO altitude is fixed at {GEO_ALTITUDE:.0f} m, got {h}")
    elif kind is PlatformKind.HAPS:
        lo, hi = HAPS_ALTITUDE_RANGE
        if not lo <= h <= hi:
            raise ConfigError(f"HAPS altitude {h} m outside [{lo:.0f}, {hi:.0f}] m")
    if spec.waypoints:
        if kind is not PlatformKind.DRONE:
            raise ConfigError(f"{kind.value}: waypoints are only meaningful for DRONE platforms")
        times = [w[0] for w in spec.waypoints]
        if any(len(w) != 3 for w in spec.waypoints):
            raise ConfigError("drone waypoints must be (t_s, lat_deg, lon_deg) triples")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("drone waypoint times must be strictly increasing")
        for _, lat, lon in spec.waypoints:
            if not -90.0 <= lat <= 90.0 or not -180.0 <= lon < 180.0:
                raise ConfigError(f"drone waypoint ({lat}, {lon}) outside valid lat/lon range")


@dataclass(frozen=True, eq=False)
class PlatformState:
    t: float
    position: np.ndarray
    velocity: np.ndarray


@dataclass(frozen=True, eq=False)
class LinkGeometry:
    """Instantaneous geometry of the path from platform ``a`` to platform ``b``.

    ``los`` points from a to b.  ``point_ahead_direction`` is the unit vector
    (perpendicular to ``los``) along which a's transmit beam must lead; it is
    the zero vector when there is no transverse motion.  ``lower`` names the
    platform ("a" or "b") at which ``elevation`` is measured.
    """

    range_m: float
    elevation: float
    los: np.ndarray
    transverse_speed: float
    point_ahead: float
    point_ahead_direction: np.ndarray
    lower: str


@dataclass(frozen=True)
class PassWindow:
    rise: float
    set: float
    max_elevation: float

    @property
    def duration(self) -> float:
        return self.set - self.rise


@dataclass(frozen=True, eq=False)
class PointAheadSeries:
    times: np.ndarray
    point_ahead: np.ndarray
    direction: np.ndarray = field(repr=False)


def _sphere_point(lat: np.ndarray, lon: np.ndarray, radius: float) -> np.ndarray:
    cl = np.cos(lat)
    return radius * np.stack([cl * np.cos(lon), cl * np.sin(lon), np.sin(lat)], axis=-1)


def _earth_fixed(spec: PlatformSpec, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Position and velocity of a non-orbiting platform in the Earth-fixed frame."""
    r = spec.orbit_radius
    n = t.shape[0]
    if spec.kind is PlatformKind.DRONE and spec.waypoints:
        wp = np.asarray(spec.waypoints)
        wt, wlat, wlon = wp[:, 0], np.radians(wp[:, 1]), np.radians(wp[:, 2])
        lat = np.interp(t, wt, wlat)
        lon = np.interp(t, wt, wlon)
        dlat = np.zeros(n)
        dlon = np.zeros(n)
        if len(wt) > 1:
            seg = np.searchsorted(wt, t, side="right") - 1
            moving = (seg >= 0) & (seg < len(wt) - 1)
            s = seg[moving]
            dt = wt[s + 1] - wt[s]
            dlat[moving] = (wlat[s + 1] - wlat[s]) / dt
            dlon[moving] = (wlon[s + 1] - wlon[s]) / dt
        pos = _sphere_point(lat, lon, r)
        sl, cl, so, co = np.sin(lat), np.cos(lat), np.sin(lon), np.cos(lon)
        vel = r * np.stack(
            [
                -sl * co * dlat - cl * so * dlon,
                -sl * so * dlat + cl * co * dlon,
                cl * dlat,
            ],
            axis=-1,
        )
        return pos, vel
    lat = 0.0 if spec.kind is PlatformKind.GEO else math.radians(spec.latitude_deg)
    lon = math.radians(spec.longitude_deg)
    pos = np.broadcast_to(_sphere_point(np.array(lat), np.array(lon), r), (n, 3)).copy()
    return pos, np.zeros((n, 3))


def _circular_orbit(spec: PlatformSpec, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = spec.orbit_radius
    n = spec.mean_motion
    inc = math.radians(spec.inclination_deg)
    raan = math.radians(spec.raan_deg)
    u = math.radians(spec.phase_deg) + n * t
    cu, su = np.cos(u), np.sin(u)
    ci, si = math.cos(inc), math.sin(inc)
    co, so = math.cos(raan), math.sin(raan)
    pos = a * np.stack([cu * co - su * ci * so, cu * so + su * ci * co, su * si], axis=-1)
    vel = a * n * np.stack([-su * co - cu * ci * so, -su * so + cu * ci * co, cu * si], axis=-1)
    return pos, vel


def propagate_many(
    spec: PlatformSpec, times, rotating_earth: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`propagate`: returns ``(positions, velocities)`` of shape (n, 3)."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ConfigError("propagation times must be finite and >= 0")
    if spec.kind is PlatformKind.LEO_CIRCULAR:
        return _circular_orbit(spec, t)
    pos, vel = _earth_fixed(spec, t)
    if rotating_earth:
        th = EARTH_ROTATION_RATE * t
        c, s = np.cos(th), np.sin(th)
        x = c * pos[:, 0] - s * pos[:, 1]
        y = s * pos[:, 0] + c * pos[:, 1]
        vx = c * vel[:, 0] - s * vel[:, 1] - EARTH_ROTATION_RATE * y
        vy = s * vel[:, 0] + c * vel[:, 1] + EARTH_ROTATION_RATE * x
        pos = np.stack([x, y, pos[:, 2]], axis=-1)
        vel = np.stack([vx, vy, vel[:, 2]], axis=-1)
    return pos, vel


def propagate(spec: PlatformSpec, t: float, rotating_earth: bool = False) -> PlatformState:
    """State of ``spec`` at time ``t`` seconds after the scenario epoch."""
    pos, vel = propagate_many(spec, [t], rotating_earth)
    return PlatformState(float(t), pos[0], vel[0])


def link_geometry(a: PlatformState, b: PlatformState) -> LinkGeometry:
    """Range, elevation and first-order point-ahead angle from ``a`` to ``b``.

    The point-ahead angle is ``2 * v_t / c`` where ``v_t`` is the component
    of ``b``'s velocity relative to ``a`` perpendicular to the line of sight.

    Raises
    ------
    DegenerateGeometryError
        If the two positions coincide.
    """
    if a.t != b.t:
        raise ConfigError(f"states are at different epochs ({a.t} s vs {b.t} s)")
    d = b.position - a.position
    rng = float(np.linalg.norm(d))
    if rng == 0.0:
        raise DegenerateGeometryError("platform positions coincide")
    los = d / rng
    v_rel = b.velocity - a.velocity
    v_perp = v_rel - np.dot(v_rel, los) * los
    vt = float(np.linalg.norm(v_perp))
    direction = v_perp / vt if vt > 0.0 else np.zeros(3)

    ra, rb = np.linalg.norm(a.position), np.linalg.norm(b.position)
    if rb < ra:
        lower, up, look = "b", b.position / rb, -los
    else:
        lower, up, look = "a", a.position / ra, los
    elevation = math.asin(float(np.clip(np.dot(look, up), -1.0, 1.0)))
    return LinkGeometry(
        range_m=rng,
        elevation=elevation,
        los=los,
        transverse_speed=vt,
        point_ahead=2.0 * vt / SPEED_OF_LIGHT,
        point_ahead_direction=direction,
        lower=lower,
    )


def point_ahead_light_time(
    separation, relative_velocity, tol: float = 1e-15, max_iter: int = 100
) -> float:
    """Point-ahead angle from explicit light-time iteration.

    ``separation`` is the vector from the terminal to its counterpart at the
    transmit instant and ``relative_velocity`` the counterpart's velocity
    relative to the terminal, assumed constant.  The angle is the one between
    the apparent (retarded) direction of the counterpart and the direction in
    which a beam sent now will meet it, each solved as a light-time fixed
    point.  Used to validate the ``2 v_t / c`` approximation.
    """
    r = np.asarray(separation, dtype=float)
    v = np.asarray(relative_velocity, dtype=float)
    c = SPEED_OF_LIGHT

    def solve(sign: float) -> float:
        tau = float(np.linalg.norm(r)) / c
        for _ in range(max_iter):
            nxt = float(np.linalg.norm(r + sign * v * tau)) / c
            if abs(nxt - tau) <= tol * tau:
                return nxt
            tau = nxt
        return tau

    seen = r - v * solve(-1.0)
    aim = r + v * solve(1.0)
    return math.atan2(float(np.linalg.norm(np.cross(seen, aim))), float(np.dot(seen, aim)))


def line_of_sight_clear(a: PlatformState, b: PlatformState, radius: float = EARTH_RADIUS) -> bool:
    """True unless the straight segment between the platforms dips below ``radius``."""
    d = b.position - a.position
    dd = float(np.dot(d, d))
    if dd == 0.0:
        return True
    s = min(1.0, max(0.0, -float(np.dot(a.position, d)) / dd))
    closest = float(np.linalg.norm(a.position + s * d))
    return closest >= radius * (1.0 - 1e-12)


def _elevations(orbit_pos: np.ndarray, site_pos: np.ndarray) -> np.ndarray:
    d = orbit_pos - site_pos
    up = site_pos / np.linalg.norm(site_pos, axis=-1, keepdims=True)
    sin_el = np.sum(d * up, axis=-1) / np.linalg.norm(d, axis=-1)
    return np.arcsin(np.clip(sin_el, -1.0, 1.0))


def predict_passes(
    orbit: PlatformSpec,
    site: PlatformSpec,
    min_elevation: float,
    window: tuple[float, float],
    step: float = 1.0,
    rotating_earth: bool = False,
    tol: float = 1e-3,
) -> list[PassWindow]:
    """Visibility windows of a circular-orbit satellite above ``min_elevation``.

    Elevation is sampled every ``step`` seconds across ``window``; each
    crossing of the mask is then refined with a bracketing root finder to
    ``tol`` seconds.  A pass already in progress at the window start (or
    still in progress at its end) is clipped to the window.  Passes shorter
    than ``step`` may be missed.
    """
    if orbit.kind is not PlatformKind.LEO_CIRCULAR:
        raise ConfigError("predict_passes needs a LEO_CIRCULAR orbit")
    if site.kind not in (PlatformKind.GROUND_SITE, PlatformKind.HAPS):
        raise ConfigError("predict_passes needs a GROUND_SITE or HAPS observer")
    if step <= 0:
        raise ConfigError("pass-prediction step must be > 0")
    t0, t1 = map(float, window)
    if t1 <= t0 or min_elevation >= math.pi / 2:
        return []

    def margin_at(t):
        p, _ = propagate_many(orbit, t, rotating_earth)
        s, _ = propagate_many(site, t, rotating_earth)
        return _elevations(p, s) - min_elevation

    n = int(math.floor((t1 - t0) / step))
    times = t0 + step * np.arange(n + 1)
    if times[-1] < t1:
        times = np.append(times, t1)
    f = margin_at(times)
    up = f >= 0.0

    def crossing(i: int) -> float:
        lo, hi = times[i - 1], times[i]
        return brentq(lambda x: float(margin_at(x)[0]), lo, hi, xtol=tol)

    passes = []
    i = 0
    while i < len(times):
        if not up[i]:
            i += 1
            continue
        rise = t0 if i == 0 else crossing(i)
        j = i
        while j + 1 < len(times) and up[j + 1]:
            j += 1
        set_ = t1 if j == len(times) - 1 else crossing(j + 1)
        if set_ > rise:
            k = i + int(np.argmax(f[i : j + 1]))
            lo = max(rise, times[k - 1] if k > 0 else rise)
            hi = min(set_, times[k + 1] if k + 1 < len(times) else set_)
            best = float(f[k])
            if hi > lo:
                res = minimize_scalar(
                    lambda x: -float(margin_at(x)[0]),
                    bounds=(lo, hi),
                    method="bounded",
                    options={"xatol": tol},
                )
                best = max(best, -float(res.fun))
            passes.append(PassWindow(rise, set_, best + min_elevation))
        i = j + 1
    return passes


def point_ahead_series(
    a: PlatformSpec,
    b: PlatformSpec,
    window: tuple[float, float],
    step: float,
    rotating_earth: bool = False,
) -> PointAheadSeries:
    """Point-ahead angle and direction sampled every ``step`` seconds.

    Each sample is exactly :func:`link_geometry` evaluated at that instant.
    """
    t0, t1 = map(float, window)
    if step <= 0 or t1 < t0:
        raise ConfigError("point-ahead series needs step > 0 and t1 >= t0")
    n = int(math.floor((t1 - t0) / step + 1e-9)) + 1
    times = t0 + step * np.arange(n)
    alpha = np.empty(n)
    direction = np.empty((n, 3))
    for k, t in enumerate(times):
        g = link_geometry(propagate(a, t, rotating_earth), propagate(b, t, rotating_earth))
        alpha[k] = g.point_ahead
        direction[k] = g.point_ahead_direction
    return PointAheadSeries(times, alpha, direction)
