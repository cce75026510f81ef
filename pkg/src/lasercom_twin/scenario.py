"""Scenario files: parsing, validation, defaulting and serialisation.

A scenario is a TOML document.  Every key carries its unit in its name
(``aperture_m``, ``data_rate_bps``, ``min_elevation_rad`` ...).  Sections::

    [scenario]        kind, start_s, duration_s, step_s, seed, rotating_earth,
                      pass_step_s
    [platform_a]      transmitting platform (PlatformSpec fields)
    [platform_b]      receiving platform
    [terminal_a]      transmitting terminal (telescope + Terminal fields)
    [terminal_b]      receiving terminal
    [edfa]            optional; thermally derated amplifier on terminal A
    [channel]         ChannelConfig fields
    [receiver]        ReceiverSpec fields (modem at terminal B)
    [pat]             optional; PatConfig fields for terminal A
    [disturbance]     optional; bias_rad, random_walk_sigma, seed and
                      [[disturbance.sinusoid]] tables

Unknown sections or keys are rejected.  Every key left out takes its
default, and each such default is listed once in the config's provenance.
"""

from __future__ import annotations

import enum
import re
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import amplifier
from .amplifier import CalibrationConstraints, EdfaModel
from .errors import CalibrationError, ConfigError, ScenarioSyntaxError
from .geometry import PlatformKind, PlatformSpec
from .link_budget import ChannelConfig, ReceiverSpec, Terminal
from .optics import TelescopeSpec
from .pat import DisturbanceModel, PatConfig, Sinusoid


class ScenarioKind(str, enum.Enum):
    LEO_GROUND = "LEO_GROUND"
    LEO_GEO = "LEO_GEO"
    GEO_GROUND = "GEO_GROUND"
    HAPS_GROUND = "HAPS_GROUND"
    DRONE_GROUND = "DRONE_GROUND"


# Platform kinds each scenario may pair, in either order.
_PAIRINGS = {
    ScenarioKind.LEO_GROUND: [{PlatformKind.LEO_CIRCULAR}, {PlatformKind.GROUND_SITE, PlatformKind.HAPS}],
    ScenarioKind.LEO_GEO: [{PlatformKind.LEO_CIRCULAR}, {PlatformKind.GEO}],
    ScenarioKind.GEO_GROUND: [{PlatformKind.GEO}, {PlatformKind.GROUND_SITE, PlatformKind.HAPS}],
    ScenarioKind.HAPS_GROUND: [{PlatformKind.HAPS}, {PlatformKind.GROUND_SITE}],
    ScenarioKind.DRONE_GROUND: [{PlatformKind.DRONE}, {PlatformKind.GROUND_SITE}],
}

# Default ground site: an optical ground station in Koganei, Tokyo.
_SITE = PlatformSpec.ground(35.7101, 139.4884, 0.0)
_LEO = PlatformSpec.leo(400e3, inclination_deg=97.6, raan_deg=139.4884, phase_deg=0.0)
_GEO = PlatformSpec.geo(139.4884)
_DEFAULT_PLATFORMS = {
    ScenarioKind.LEO_GROUND: (_LEO, _SITE),
    ScenarioKind.LEO_GEO: (_LEO, _GEO),
    ScenarioKind.GEO_GROUND: (_GEO, _SITE),
    ScenarioKind.HAPS_GROUND: (PlatformSpec.haps(35.80, 139.4884), _SITE),
    ScenarioKind.DRONE_GROUND: (
        PlatformSpec.drone(((0.0, 35.7150, 139.4884), (600.0, 35.7150, 139.4984)), 100.0),
        _SITE,
    ),
}

ASSUMPTION_NOTES = {
    "platform_a.altitude_m": "LEO/HAPS altitude is not published; typical value assumed",
    "terminal_a.divergence_factor": "transmit divergence taken as the diffraction limit lambda/D",
    "terminal_b.divergence_factor": "transmit divergence taken as the diffraction limit lambda/D",
    "terminal_a.coupling_base": "ideal single-mode coupling of a circular aperture (0.81)",
    "terminal_b.coupling_base": "ideal single-mode coupling of a circular aperture (0.81)",
    "terminal_a.tx_path_efficiency": "passive optics lumped at the measured 93% telescope transmission",
    "terminal_a.rx_path_efficiency": "passive optics lumped at the measured 93% telescope transmission",
    "terminal_b.tx_path_efficiency": "passive optics lumped at the measured 93% telescope transmission",
    "terminal_b.rx_path_efficiency": "passive optics lumped at the measured 93% telescope transmission",
    "terminal_a.beacon_divergence_rad": "beacon divergence not published",
    "terminal_b.beacon_divergence_rad": "beacon divergence not published",
    "receiver.photons_per_bit": "modem sensitivity not published",
    "channel.zenith_loss_db": "flat airmass model, zenith loss assumed",
    "edfa.tau_s": "thermal time constant not published",
    "edfa.delta_t_ss_c": "steady-state self-heating not published",
    "edfa.t_env_c": "ambient temperature assumed",
    "edfa.t_start_c": "switch-on temperature assumed",
    "pat": "detector FOVs, loop rates, gains and FPM range are not published",
}


@dataclass(frozen=True)
class RunSettings:
    kind: ScenarioKind
    start_s: float = 0.0
    duration_s: float = 60.0
    step_s: float = 0.1
    seed: int = 0
    rotating_earth: bool = False
    pass_step_s: float = 1.0


@dataclass(frozen=True)
class EdfaSettings:
    """Amplifier section.  ``slope_w_per_c=None`` means calibrate it."""

    p0_w: float = 2.5
    slope_w_per_c: float | None = None
    tau_s: float = 1200.0
    delta_t_ss_c: float = 20.0
    t_env_c: float = 25.0
    t_start_c: float = 25.0
    p_min_w: float = amplifier.REQUIRED_POWER_W
    t1_s: float = 360.0

    def constraints(self) -> CalibrationConstraints:
        return CalibrationConstraints(self.p0_w, self.p_min_w, self.t1_s, self.t_start_c)

    def calibration(self) -> amplifier.CalibrationResult:
        return amplifier.calibrate(
            self.constraints(),
            slope_w_per_c=self.slope_w_per_c,
            tau_s=self.tau_s,
            delta_t_ss_c=self.delta_t_ss_c,
            t_env_c=self.t_env_c,
        )

    def model(self) -> EdfaModel:
        return self.calibration().model


@dataclass(frozen=True)
class ProvenanceEntry:
    key: str
    value: object
    note: str = ""

    def to_dict(self) -> dict:
        return {"key": self.key, "value": _plain(self.value), "note": self.note}


@dataclass(frozen=True)
class ScenarioConfig:
    settings: RunSettings
    platform_a: PlatformSpec
    platform_b: PlatformSpec
    terminal_a: Terminal = field(default_factory=Terminal)
    terminal_b: Terminal = field(default_factory=Terminal)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    receiver: ReceiverSpec = field(default_factory=ReceiverSpec)
    edfa: EdfaSettings | None = None
    pat: PatConfig | None = None
    disturbance: DisturbanceModel | None = None
    pointing_error_rad: float = 0.0
    provenance: tuple[ProvenanceEntry, ...] = field(default=(), compare=False)

    @property
    def kind(self) -> ScenarioKind:
        return self.settings.kind

    @property
    def crosses_atmosphere(self) -> bool:
        low = {PlatformKind.GROUND_SITE, PlatformKind.DRONE}
        return self.platform_a.kind in low or self.platform_b.kind in low

    def validate(self) -> None:
        """Check cross-section invariants; raises ConfigError."""
        s = self.settings
        if not s.duration_s > 0:
            raise ConfigError(f"scenario.duration_s must be > 0, got {s.duration_s}")
        if not s.step_s > 0:
            raise ConfigError(f"scenario.step_s must be > 0, got {s.step_s}")
        if not s.start_s >= 0:
            raise ConfigError("scenario.start_s must be >= 0")
        if not s.pass_step_s > 0:
            raise ConfigError("scenario.pass_step_s must be > 0")
        if not 0 <= s.seed < 2**64:
            raise ConfigError("scenario.seed must be an unsigned 64-bit integer")
        if not self.pointing_error_rad >= 0:
            raise ConfigError("terminal_a.pointing_error_rad must be >= 0")
        a, b = {self.platform_a.kind}, {self.platform_b.kind}
        first, second = _PAIRINGS[s.kind]
        if not ((a <= first and b <= second) or (a <= second and b <= first)):
            raise ConfigError(
                f"scenario kind {s.kind.value} is inconsistent with platforms "
                f"{self.platform_a.kind.value} and {self.platform_b.kind.value}"
            )
        if self.pat is not None:
            ratio = s.step_s * self.pat.fpm_rate_hz
            if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
                raise ConfigError(
                    f"scenario.step_s ({s.step_s}) must be a whole number of PAT ticks "
                    f"(1/{self.pat.fpm_rate_hz:g} s)"
                )
        elif self.disturbance is not None:
            raise ConfigError("a [disturbance] section needs a [pat] section")
        if self.edfa is not None:
            try:
                self.edfa.calibration()
            except CalibrationError as exc:
                raise ConfigError(f"edfa calibration: {exc}") from exc


# -- parsing ----------------------------------------------------------------

_TELESCOPE_KEYS = tuple(f.name for f in fields(TelescopeSpec))
_TERMINAL_KEYS = tuple(f.name for f in fields(Terminal) if f.name != "telescope")


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    """Best-effort line number of ``[section]`` or of ``key`` inside it."""
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        m = re.match(r"^\[\[?\s*([^\]]+?)\s*\]\]?$", line)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return no
            continue
        if key is not None and current == section and re.match(rf"^\"?{re.escape(key)}\"?\s*=", line):
            return no
    return None


class _Section:
    """Typed reader over one TOML table that records which keys were defaulted."""

    def __init__(self, name: str, table: dict, text: str, provenance: list):
        if not isinstance(table, dict):
            raise ScenarioSyntaxError(f"[{name}] must be a table", _line_of(text, name))
        self.name = name
        self.table = dict(table)
        self.text = text
        self.provenance = provenance
        self.used: set[str] = set()

    def error(self, key: str, message: str) -> ConfigError:
        line = _line_of(self.text, self.name, key)
        where = f" (line {line})" if line else ""
        return ConfigError(f"{self.name}.{key}: {message}{where}")

    def get(self, key: str, default, kind=float, note: str | None = None):
        self.used.add(key)
        if key not in self.table:
            full = f"{self.name}.{key}"
            if note is None:
                note = ASSUMPTION_NOTES.get(full, ASSUMPTION_NOTES.get(self.name, "default"))
            self.provenance.append(ProvenanceEntry(full, default, note))
            return default
        value = self.table[key]
        try:
            if kind is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise TypeError
                return float(value)
            if kind is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise TypeError
                return value
            if kind is bool:
                if not isinstance(value, bool):
                    raise TypeError
                return value
            if kind is str:
                if not isinstance(value, str):
                    raise TypeError
                return value
            return kind(value)
        except (TypeError, ValueError):
            raise self.error(key, f"invalid value {value!r}") from None

    def finish(self) -> None:
        extra = sorted(set(self.table) - self.used)
        if extra:
            raise self.error(extra[0], "unknown key")


def _pair(value) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise ValueError
    return (float(value[0]), float(value[1]))


def _waypoints(value) -> tuple[tuple[float, float, float], ...]:
    if not isinstance(value, list):
        raise ValueError
    out = []
    for w in value:
        if not isinstance(w, list) or len(w) != 3:
            raise ValueError
        out.append(tuple(float(v) for v in w))
    return tuple(out)


def _read_platform(sec: _Section, default: PlatformSpec) -> PlatformSpec:
    kind = sec.get("kind", default.kind.value, str)
    try:
        kind = PlatformKind(kind)
    except ValueError:
        raise sec.error("kind", f"unknown platform kind {kind!r}") from None
    base = default if kind is default.kind else PlatformSpec(kind)
    values = {
        "latitude_deg": sec.get("latitude_deg", base.latitude_deg),
        "longitude_deg": sec.get("longitude_deg", base.longitude_deg),
        "altitude_m": sec.get("altitude_m", base.altitude_m),
        "inclination_deg": sec.get("inclination_deg", base.inclination_deg),
        "raan_deg": sec.get("raan_deg", base.raan_deg),
        "phase_deg": sec.get("phase_deg", base.phase_deg),
        "waypoints": sec.get("waypoints", base.waypoints, _waypoints),
    }
    sec.finish()
    try:
        return PlatformSpec(kind, **values)
    except ConfigError as exc:
        raise ConfigError(f"{sec.name}: {exc}") from None


def _read_terminal(sec: _Section, transmitter: bool) -> tuple[Terminal, float]:
    tdef, ddef = TelescopeSpec(), Terminal()
    tel = {k: sec.get(k, getattr(tdef, k)) for k in _TELESCOPE_KEYS}
    term = {k: sec.get(k, getattr(ddef, k)) for k in _TERMINAL_KEYS}
    # static pointing error only matters for the transmitting terminal
    pointing = sec.get("pointing_error_rad", 0.0) if transmitter else 0.0
    sec.finish()
    try:
        return Terminal(TelescopeSpec(**tel), **term), pointing
    except ConfigError as exc:
        raise ConfigError(f"{sec.name}: {exc}") from None


def _read_plain(sec: _Section, cls, overrides: dict | None = None):
    overrides = overrides or {}
    default = cls()
    values = {}
    for f in fields(cls):
        kind = overrides.get(f.name, type(getattr(default, f.name)))
        values[f.name] = sec.get(f.name, getattr(default, f.name), kind)
    sec.finish()
    try:
        return cls(**values)
    except ConfigError as exc:
        raise ConfigError(f"{sec.name}: {exc}") from None


def _read_disturbance(sec: _Section) -> DisturbanceModel:
    default = DisturbanceModel()
    bias = sec.get("bias_rad", default.bias_rad, _pair)
    rw = sec.get("random_walk_sigma", default.random_walk_sigma)
    seed = sec.get("seed", default.seed, int)
    raw = sec.table.get("sinusoid", [])
    sec.used.add("sinusoid")
    if not isinstance(raw, list):
        raise sec.error("sinusoid", "must be an array of tables")
    tones = []
    for i, item in enumerate(raw):
        tone = _Section(f"disturbance.sinusoid[{i}]", item, sec.text, [])
        tones.append(
            Sinusoid(
                amplitude_rad=tone.get("amplitude_rad", 0.0),
                frequency_hz=tone.get("frequency_hz", 0.0),
                phase_rad=tone.get("phase_rad", 0.0),
                axis=tone.get("axis", 0, int),
            )
        )
        tone.finish()
    sec.finish()
    try:
        return DisturbanceModel(bias, rw, tuple(tones), seed)
    except ConfigError as exc:
        raise ConfigError(f"disturbance: {exc}") from None


_SECTIONS = {
    "scenario", "platform_a", "platform_b", "terminal_a", "terminal_b",
    "edfa", "channel", "receiver", "pat", "disturbance",
}


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate scenario text.

    Raises
    ------
    ScenarioSyntaxError
        Malformed TOML (the message carries the line number).
    ConfigError
        A value violates an invariant; the message names the key.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        msg = getattr(exc, "msg", str(exc))
        raise ScenarioSyntaxError(msg, line) from None

    for name in doc:
        if name not in _SECTIONS:
            raise ScenarioSyntaxError(f"unknown section [{name}]", _line_of(text, name))
    if "scenario" not in doc:
        raise ConfigError("missing [scenario] section")

    prov: list[ProvenanceEntry] = []

    def section(name: str) -> _Section:
        return _Section(name, doc.get(name, {}), text, prov)

    sc = section("scenario")
    if "kind" not in sc.table:
        raise ConfigError("scenario.kind is required")
    try:
        kind = ScenarioKind(sc.get("kind", None, str))
    except ValueError:
        raise sc.error("kind", f"unknown scenario kind {sc.table['kind']!r}") from None
    rdef = RunSettings(kind)
    settings = RunSettings(
        kind=kind,
        start_s=sc.get("start_s", rdef.start_s),
        duration_s=sc.get("duration_s", rdef.duration_s),
        step_s=sc.get("step_s", rdef.step_s),
        seed=sc.get("seed", rdef.seed, int),
        rotating_earth=sc.get("rotating_earth", rdef.rotating_earth, bool),
        pass_step_s=sc.get("pass_step_s", rdef.pass_step_s),
    )
    sc.finish()

    def_a, def_b = _DEFAULT_PLATFORMS[kind]
    platform_a = _read_platform(section("platform_a"), def_a)
    platform_b = _read_platform(section("platform_b"), def_b)
    terminal_a, pointing = _read_terminal(section("terminal_a"), True)
    terminal_b, _ = _read_terminal(section("terminal_b"), False)
    channel = _read_plain(section("channel"), ChannelConfig)
    receiver = _read_plain(section("receiver"), ReceiverSpec)

    edfa = None
    if "edfa" in doc:
        edfa = _read_plain(section("edfa"), EdfaSettings, {"slope_w_per_c": float})
    pat = None
    if "pat" in doc:
        pat = _read_plain(section("pat"), PatConfig, {"handover_dwell": int})
    disturbance = None
    if "disturbance" in doc:
        disturbance = _read_disturbance(section("disturbance"))
    elif pat is not None:
        disturbance = DisturbanceModel()

    cfg = ScenarioConfig(
        settings=settings,
        platform_a=platform_a,
        platform_b=platform_b,
        terminal_a=terminal_a,
        terminal_b=terminal_b,
        channel=channel,
        receiver=receiver,
        edfa=edfa,
        pat=pat,
        disturbance=disturbance,
        pointing_error_rad=pointing,
        provenance=tuple(prov),
    )
    cfg.validate()
    return cfg


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read and parse a scenario file; a missing file raises ConfigError."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {p}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {p}: {exc}") from None
    return parse_scenario(text)


# -- serialisation ----------------------------------------------------------


def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    return value


def _table(obj, skip=()) -> dict:
    out = {}
    for f in fields(obj):
        if f.name in skip:
            continue
        v = getattr(obj, f.name)
        if v is None:
            continue
        out[f.name] = _plain(v)
    return out


def to_dict(cfg: ScenarioConfig) -> dict:
    """Fully explicit document for ``cfg`` (no key relies on a default)."""
    doc = {
        "scenario": _table(cfg.settings),
        "platform_a": _table(cfg.platform_a),
        "platform_b": _table(cfg.platform_b),
    }
    for name, term in (("terminal_a", cfg.terminal_a), ("terminal_b", cfg.terminal_b)):
        t = _table(term.telescope)
        t.update(_table(term, skip=("telescope",)))
        if name == "terminal_a":
            t["pointing_error_rad"] = cfg.pointing_error_rad
        doc[name] = t
    doc["channel"] = _table(cfg.channel)
    doc["receiver"] = _table(cfg.receiver)
    if cfg.edfa is not None:
        doc["edfa"] = _table(cfg.edfa)
    if cfg.pat is not None:
        doc["pat"] = _table(cfg.pat)
    if cfg.disturbance is not None:
        d = cfg.disturbance
        dist = {"bias_rad": list(d.bias_rad), "random_walk_sigma": d.random_walk_sigma, "seed": d.seed}
        if d.sinusoids:
            dist["sinusoid"] = [_table(s) for s in d.sinusoids]
        doc["disturbance"] = dist
    return doc


def serialize(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return replace(cfg, settings=replace(cfg.settings, seed=seed))


__all__ = [
    "ScenarioKind",
    "RunSettings",
    "EdfaSettings",
    "ProvenanceEntry",
    "ScenarioConfig",
    "parse_scenario",
    "load_scenario",
    "serialize",
    "to_dict",
    "with_seed",
]
