"""End-to-end simulation of one scenario.

A run samples the scenario window every ``step_s`` seconds.  At each sample
it propagates both platforms, computes the link geometry, the amplifier
output and (when PAT is enabled) the pointing state, and evaluates the
communication-link ledger.  The PAT chain itself runs at its own 1/fpm_rate
tick across the whole window; the budget reads it at the sample instants.

Outputs are a CSV (or JSON) time series and a JSON summary.  Both are pure
functions of the scenario and its seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import amplifier, geometry, link_budget, optics, pat
from .errors import LasercomError, SimulationError
from .geometry import PlatformKind, PlatformState
from .link_budget import LinkBudgetReport
from .scenario import ScenarioConfig

COLUMNS = (
    "t_s", "range_m", "elevation_rad", "alpha_rad", "edfa_w",
    "residual_rad", "pointing_loss_db", "rx_dbm", "margin_db", "mode",
)
_PAT_COLUMNS = ("residual_rad", "pointing_loss_db", "mode")


@dataclass(frozen=True)
class RunSummary:
    """Aggregates of one run.

    ``availability`` is the fraction of samples at which the link closes
    (status OK and margin >= 0); ``visibility`` the fraction at which a
    ledger could be evaluated at all.  Margin statistics are over the
    evaluated samples and are None when there are none.
    ``residual_rms_rad`` is the RMS of the sampled receive residual.
    """

    kind: str
    seed: int
    samples: int
    margin_min_db: float | None
    margin_median_db: float | None
    margin_max_db: float | None
    availability: float
    visibility: float
    time_to_linked_s: float | None
    residual_rms_rad: float | None
    edfa_min_power_w: float | None
    passes: tuple[geometry.PassWindow, ...]
    warnings: tuple[str, ...]
    first_budget: dict
    provenance: tuple[dict, ...]
    columns: tuple[str, ...]
    table: dict = field(default_factory=dict, compare=False, repr=False)
    files: tuple[str, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "samples": self.samples,
            "margin_db": {
                "min": self.margin_min_db,
                "median": self.margin_median_db,
                "max": self.margin_max_db,
            },
            "availability": self.availability,
            "visibility": self.visibility,
            "time_to_linked_s": self.time_to_linked_s,
            "residual_rms_rad": self.residual_rms_rad,
            "edfa_min_power_w": self.edfa_min_power_w,
            "passes": [
                {"rise_s": p.rise, "set_s": p.set, "duration_s": p.duration,
                 "max_elevation_rad": p.max_elevation}
                for p in self.passes
            ],
            "warnings": list(self.warnings),
            "columns": list(self.columns),
            "first_budget": self.first_budget,
            "provenance": list(self.provenance),
        }


def sample_times(cfg: ScenarioConfig) -> np.ndarray:
    s = cfg.settings
    n = int(math.floor(s.duration_s / s.step_s + 1e-9))
    return s.start_s + s.step_s * np.arange(n + 1)


def _columns(cfg: ScenarioConfig) -> tuple[str, ...]:
    cols = []
    for c in COLUMNS:
        if c == "edfa_w" and cfg.edfa is None:
            continue
        if c in _PAT_COLUMNS and cfg.pat is None:
            continue
        cols.append(c)
    return tuple(cols)


def _transverse_basis(position: np.ndarray, los: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors spanning the plane normal to ``los`` at ``position``.

    The first is horizontal (local east-west-ish), the second completes a
    right-handed frame with the line of sight.
    """
    up = position / np.linalg.norm(position)
    e1 = np.cross(up, los)
    n = np.linalg.norm(e1)
    if n < 1e-12:  # looking straight up or down
        e1 = np.cross(np.array([0.0, 0.0, 1.0]), los)
        n = np.linalg.norm(e1)
        if n < 1e-12:
            e1 = np.cross(np.array([1.0, 0.0, 0.0]), los)
            n = np.linalg.norm(e1)
    e1 = e1 / n
    return e1, np.cross(los, e1)


@dataclass(frozen=True, eq=False)
class _Geometry:
    range_m: np.ndarray
    elevation: np.ndarray
    alpha: np.ndarray
    alpha_xy: np.ndarray  # (n, 2) in terminal A's transverse frame
    clear: np.ndarray


def _geometry(cfg: ScenarioConfig, times: np.ndarray) -> _Geometry:
    rot = cfg.settings.rotating_earth
    try:
        pa, va = geometry.propagate_many(cfg.platform_a, times, rot)
        pb, vb = geometry.propagate_many(cfg.platform_b, times, rot)
    except LasercomError as exc:
        raise SimulationError("geometry", 0, exc) from exc
    n = times.size
    rng, el, alpha, clear = np.empty(n), np.empty(n), np.empty(n), np.empty(n, dtype=bool)
    alpha_xy = np.zeros((n, 2))
    for k in range(n):
        a = PlatformState(float(times[k]), pa[k], va[k])
        b = PlatformState(float(times[k]), pb[k], vb[k])
        try:
            g = geometry.link_geometry(a, b)
        except LasercomError as exc:
            raise SimulationError("geometry", k, exc) from exc
        rng[k], el[k], alpha[k] = g.range_m, g.elevation, g.point_ahead
        clear[k] = cfg.crosses_atmosphere or geometry.line_of_sight_clear(a, b)
        e1, e2 = _transverse_basis(pa[k], g.los)
        lead = g.point_ahead * g.point_ahead_direction
        alpha_xy[k] = (float(lead @ e1), float(lead @ e2))
    return _Geometry(rng, el, alpha, alpha_xy, clear)


def _edfa_power(cfg: ScenarioConfig, times: np.ndarray) -> np.ndarray | None:
    if cfg.edfa is None:
        return None
    try:
        model = cfg.edfa.model()
    except LasercomError as exc:
        raise SimulationError("amplifier", 0, exc) from exc
    _, power = amplifier.trajectory(model, cfg.edfa.t_start_c, times - cfg.settings.start_s)
    return power


def _beacon_dbm(cfg: ScenarioConfig, geo: _Geometry, scint: np.ndarray, k: int) -> float:
    if not geo.clear[k]:
        return -math.inf
    report = link_budget.beacon_budget(
        cfg.terminal_b, cfg.terminal_a, cfg.channel, float(geo.range_m[k]),
        float(geo.elevation[k]), cfg.crosses_atmosphere, scintillation_db=float(scint[k]),
    )
    return report.received_dbm if report.available else -math.inf


def _pat_series(cfg: ScenarioConfig, geo: _Geometry, scint: np.ndarray, seed: int):
    """PAT run across the window, plus the tick index of every budget sample."""
    p = cfg.pat
    s = cfg.settings
    per_step = int(round(s.step_s * p.fpm_rate_hz))
    samples = geo.range_m.size
    ticks = (samples - 1) * per_step + 1
    dt = 1.0 / p.fpm_rate_hz
    beacon = [None] * samples

    def index(t: float) -> int:
        return min(int(t / s.step_s + 1e-9), samples - 1)

    def beacon_at(t: float) -> float:
        k = index(t)
        if beacon[k] is None:
            beacon[k] = _beacon_dbm(cfg, geo, scint, k)
        return beacon[k]

    def alpha_at(t: float):
        a = geo.alpha_xy[index(t)]
        return (float(a[0]), float(a[1]))

    # the jitter random walk gets its own stream derived from both seeds
    mixed = np.random.SeedSequence([cfg.disturbance.seed, seed]).generate_state(2, dtype=np.uint64)
    disturbance = replace(cfg.disturbance, seed=int(mixed[0]))
    try:
        series = pat.run(
            p, disturbance, int(mixed[1]), ticks * dt, dt,
            alpha=alpha_at, beacon_dbm=beacon_at,
            divergence_rad=optics.divergence(cfg.terminal_a.telescope),
        )
    except LasercomError as exc:
        raise SimulationError("pat", 0, exc) from exc
    return series, np.arange(samples) * per_step


def budget_at(
    cfg: ScenarioConfig,
    k: int,
    t: float,
    range_m: float,
    elevation: float,
    clear: bool,
    power_w: float,
    pointing_error_rad: float,
    scintillation_db: float,
) -> LinkBudgetReport:
    """Communication-link ledger for one sample."""
    required = link_budget.required_power(cfg.receiver)
    if not clear:
        return LinkBudgetReport.unavailable(required, "line of sight blocked by the Earth")
    if power_w <= 0.0:
        return LinkBudgetReport.unavailable(required, "amplifier output is zero")
    try:
        return link_budget.evaluate(
            cfg.terminal_a, cfg.terminal_b, cfg.receiver, cfg.channel, range_m, elevation,
            cfg.crosses_atmosphere, pointing_error_rad, scintillation_db, tx_power_w=power_w,
        )
    except LasercomError as exc:
        raise SimulationError("link_budget", k, exc) from exc


def instant_budget(cfg: ScenarioConfig, t: float) -> LinkBudgetReport:
    """Ledger at absolute time ``t`` with the static pointing error (no PAT)."""
    times = np.array([float(t)])
    geo = _geometry(cfg, times)
    power = _edfa_power(cfg, times)
    p = cfg.terminal_a.tx_power_w if power is None else float(power[0])
    scint = link_budget.scintillation_draws(cfg.channel.scintillation_sigma, cfg.settings.seed, times)
    return budget_at(cfg, 0, t, float(geo.range_m[0]), float(geo.elevation[0]),
                     bool(geo.clear[0]), p, cfg.pointing_error_rad, float(scint[0]))


def passes(cfg: ScenarioConfig) -> list[geometry.PassWindow]:
    """Visibility windows when one platform is a LEO satellite over a surface site."""
    a, b = cfg.platform_a, cfg.platform_b
    surface = {PlatformKind.GROUND_SITE, PlatformKind.HAPS, PlatformKind.DRONE}
    if a.kind is PlatformKind.LEO_CIRCULAR and b.kind in surface:
        orbit, site = a, b
    elif b.kind is PlatformKind.LEO_CIRCULAR and a.kind in surface:
        orbit, site = b, a
    else:
        return []
    s = cfg.settings
    if site.kind is PlatformKind.DRONE:
        return []
    try:
        return geometry.predict_passes(
            orbit, site, cfg.channel.min_elevation_rad, (s.start_s, s.start_s + s.duration_s),
            step=s.pass_step_s, rotating_earth=s.rotating_earth,
        )
    except LasercomError as exc:
        raise SimulationError("geometry", 0, exc) from exc


def _rms(values) -> float | None:
    v = [x for x in values if x is not None]
    if not v:
        return None
    return math.sqrt(math.fsum(x * x for x in v) / len(v))


def aggregates(table: dict) -> dict:
    """Summary statistics recomputed from a time-series table."""
    margins = [m for m in table["margin_db"] if m is not None]
    n = len(table["t_s"])
    out = {
        "margin_min_db": min(margins) if margins else None,
        "margin_median_db": float(np.median(margins)) if margins else None,
        "margin_max_db": max(margins) if margins else None,
        "availability": sum(1 for m in margins if m >= 0.0) / n,
        "visibility": len(margins) / n,
        "residual_rms_rad": _rms(table["residual_rad"]) if "residual_rad" in table else None,
        "edfa_min_power_w": min(table["edfa_w"]) if "edfa_w" in table else None,
    }
    return out


def simulate(cfg: ScenarioConfig) -> RunSummary:
    """Run the scenario in memory; see :func:`run_scenario` for the files."""
    s = cfg.settings
    times = sample_times(cfg)
    geo = _geometry(cfg, times)
    power = _edfa_power(cfg, times)
    scint = link_budget.scintillation_draws(cfg.channel.scintillation_sigma, s.seed, times)

    series = None
    if cfg.pat is not None:
        series, idx = _pat_series(cfg, geo, scint, s.seed)
        tx_err = series.tx_error_rad[idx]
    else:
        tx_err = np.full(times.size, cfg.pointing_error_rad)

    cols = _columns(cfg)
    table = {c: [] for c in cols}
    first = None
    for k, t in enumerate(times):
        p = cfg.terminal_a.tx_power_w if power is None else float(power[k])
        report = budget_at(cfg, k, float(t), float(geo.range_m[k]), float(geo.elevation[k]),
                           bool(geo.clear[k]), p, float(tx_err[k]), float(scint[k]))
        if first is None:
            first = report
        row = {
            "t_s": float(t),
            "range_m": float(geo.range_m[k]),
            "elevation_rad": float(geo.elevation[k]),
            "alpha_rad": float(geo.alpha[k]),
            "edfa_w": p,
            "rx_dbm": report.received_dbm if report.available else None,
            "margin_db": report.margin_db if report.available else None,
        }
        if series is not None:
            j = idx[k]
            row["residual_rad"] = float(series.residual_rad[j])
            row["pointing_loss_db"] = float(series.pointing_loss_db[j])
            row["mode"] = series.mode[j].value
        for c in cols:
            table[c].append(row[c])

    warnings = []
    if cfg.edfa is not None:
        try:
            msg = amplifier.thermal_warning(cfg.edfa.model(), cfg.edfa.t_start_c, s.duration_s)
        except LasercomError as exc:
            raise SimulationError("amplifier", 0, exc) from exc
        if msg:
            warnings.append(msg)
    agg = aggregates(table)
    return RunSummary(
        kind=cfg.kind.value,
        seed=s.seed,
        samples=int(times.size),
        time_to_linked_s=None if series is None else series.first_time_in(pat.Mode.LINKED),
        passes=tuple(passes(cfg)),
        warnings=tuple(warnings),
        first_budget=first.to_dict(),
        provenance=tuple(e.to_dict() for e in cfg.provenance),
        columns=cols,
        table=table,
        **agg,
    )


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_csv(columns, table: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in zip(*(table[c] for c in columns)):
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> dict:
    """Parse a time-series CSV back into columns (blank cells become None)."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    out = {c: [] for c in header}
    for r in body:
        for c, v in zip(header, r):
            if c == "mode":
                out[c].append(v)
            else:
                out[c].append(None if v == "" else float(v))
    return out


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None, fmt: str = "csv") -> RunSummary:
    """Simulate and, if ``out_dir`` is given, write the time series and summary.

    Files are ``timeseries.csv`` (or ``timeseries.json``) and ``summary.json``.

    Raises
    ------
    SimulationError
        Naming the module and sample index that failed.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    summary = simulate(cfg)
    if out_dir is None:
        return summary
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series_path = out / f"timeseries.{fmt}"
    if fmt == "csv":
        series_path.write_text(table_csv(summary.columns, summary.table), encoding="utf-8")
    else:
        series_path.write_text(json.dumps(summary.table, indent=1) + "\n", encoding="utf-8")
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary.to_dict(), indent=2) + "\n", encoding="utf-8")
    return replace(summary, files=(str(series_path), str(summary_path)))
