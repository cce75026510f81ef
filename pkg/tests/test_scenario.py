from __future__ import annotations

import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lasercom_twin.errors import ConfigError, ScenarioSyntaxError
from lasercom_twin.geometry import PlatformKind, PlatformSpec
from lasercom_twin.scenario import (
    EdfaSettings,
    ScenarioKind,
    load_scenario,
    parse_scenario,
    serialize,
    to_dict,
)

MINIMAL = '[scenario]\nkind = "LEO_GROUND"\n'


def flat_keys(doc):
    keys = set()
    for section, table in doc.items():
        for key, value in table.items():
            if section == "disturbance" and key == "sinusoid":
                continue
            keys.add(f"{section}.{key}")
    return keys


def test_minimal_file_records_every_default_once():
    cfg = parse_scenario(MINIMAL)
    assert cfg.kind is ScenarioKind.LEO_GROUND
    names = [e.key for e in cfg.provenance]
    assert all(n == 1 for n in Counter(names).values())
    assert flat_keys(to_dict(cfg)) - {"scenario.kind"} <= set(names)
    assert "scenario.kind" not in names
    leo_alt = next(e for e in cfg.provenance if e.key == "platform_a.altitude_m")
    assert leo_alt.value == 400e3 and "assumed" in leo_alt.note


def test_given_keys_are_not_in_provenance():
    cfg = parse_scenario(MINIMAL + "step_s = 0.5\n[receiver]\ndata_rate_bps = 1e9\n")
    names = {e.key for e in cfg.provenance}
    assert "scenario.step_s" not in names and "receiver.data_rate_bps" not in names
    assert "receiver.photons_per_bit" in names


def test_optional_sections_default_as_a_whole():
    cfg = parse_scenario('[scenario]\nkind = "GEO_GROUND"\nstep_s = 0.01\n[pat]\n[edfa]\n')
    assert cfg.pat is not None and cfg.edfa is not None and cfg.disturbance is not None
    assert cfg.edfa.model().slope_w_per_c > 0
    assert any(e.key == "pat.coarse_fov_rad" for e in cfg.provenance)


def test_fine_fov_wider_than_coarse_names_the_invariant():
    with pytest.raises(ConfigError, match="fine detector FOV"):
        parse_scenario(MINIMAL + "[pat]\nfine_fov_rad = 0.1\ncoarse_fov_rad = 0.05\n")


def test_syntax_error_reports_line():
    with pytest.raises(ScenarioSyntaxError) as info:
        parse_scenario(MINIMAL + "\n[channel]\nzenith_loss_db = = 2\n")
    assert info.value.line == 5
    assert str(info.value).startswith("line 5")


def test_unknown_key_and_section_rejected():
    with pytest.raises(ConfigError, match=r"channel\.zenith_loss: unknown key \(line 4\)"):
        parse_scenario(MINIMAL + "[channel]\nzenith_loss = 2\n")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_scenario(MINIMAL + "[telescope]\n")


def test_wrong_type_is_reported():
    with pytest.raises(ConfigError, match="scenario.duration_s"):
        parse_scenario(MINIMAL + 'duration_s = "long"\n')


def test_scenario_kind_must_match_platforms():
    with pytest.raises(ConfigError, match="inconsistent"):
        parse_scenario('[scenario]\nkind = "LEO_GEO"\n[platform_b]\nkind = "GROUND_SITE"\n')


def test_step_must_be_whole_pat_ticks():
    with pytest.raises(ConfigError, match="whole number of PAT ticks"):
        parse_scenario('[scenario]\nkind = "GEO_GROUND"\nstep_s = 0.0015\n[pat]\n')


def test_disturbance_needs_pat():
    with pytest.raises(ConfigError, match="needs a \\[pat\\]"):
        parse_scenario(MINIMAL + "[disturbance]\nrandom_walk_sigma = 1e-6\n")


def test_infeasible_edfa_is_a_config_error():
    with pytest.raises(ConfigError, match="calibration"):
        parse_scenario(MINIMAL + "[edfa]\np0_w = 1.5\n")


def test_missing_file_names_it(tmp_path):
    missing = tmp_path / "nowhere.toml"
    with pytest.raises(ConfigError, match="nowhere.toml"):
        load_scenario(missing)


def test_fixtures_round_trip(scenarios):
    for path in sorted(scenarios.glob("*.toml")):
        cfg = load_scenario(path)
        again = parse_scenario(serialize(cfg))
        assert again == cfg, path.name
        assert serialize(again) == serialize(cfg)


finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def configs(draw):
    kind = draw(st.sampled_from(list(ScenarioKind)))
    text = f'[scenario]\nkind = "{kind.value}"\n'
    cfg = parse_scenario(text)
    lines = [
        f"duration_s = {draw(st.floats(1.0, 1e5, **finite))!r}",
        f"seed = {draw(st.integers(0, 2**63 - 1))}",
        f"rotating_earth = {str(draw(st.booleans())).lower()}",
    ]
    doc = text + "\n".join(lines) + "\n"
    if cfg.platform_a.kind is PlatformKind.LEO_CIRCULAR:
        doc += "[platform_a]\n"
        doc += f"altitude_m = {draw(st.floats(200e3, 2000e3, **finite))!r}\n"
        doc += f"inclination_deg = {draw(st.floats(0.0, 180.0, **finite))!r}\n"
        doc += f"phase_deg = {draw(st.floats(0.0, 360.0, **finite))!r}\n"
    doc += "[platform_b]\n"
    doc += f"latitude_deg = {draw(st.floats(-90.0, 90.0, **finite))!r}\n"
    doc += "[terminal_a]\n"
    doc += f"aperture_m = {draw(st.floats(0.01, 1.0, **finite))!r}\n"
    doc += f"wfe_waves = {draw(st.floats(0.0, 0.2, **finite))!r}\n"
    doc += f"tx_power_w = {draw(st.floats(0.01, 10.0, **finite))!r}\n"
    doc += "[channel]\n"
    doc += f"zenith_loss_db = {draw(st.floats(0.0, 5.0, **finite))!r}\n"
    doc += f"scintillation_sigma = {draw(st.floats(0.0, 0.5, **finite))!r}\n"
    if draw(st.booleans()):
        doc += "[edfa]\n"
        doc += f"tau_s = {draw(st.floats(10.0, 1e4, **finite))!r}\n"
    if draw(st.booleans()):
        doc = doc.replace("[scenario]\n", "[scenario]\nstep_s = 0.01\n", 1)
        doc += "[pat]\n"
        doc += f"gimbal_kp = {draw(st.floats(0.01, 1.0, **finite))!r}\n"
        doc += "[disturbance]\n"
        doc += f"bias_rad = [{draw(st.floats(-0.05, 0.05, **finite))!r}, 0.0]\n"
        doc += "[[disturbance.sinusoid]]\n"
        doc += f"amplitude_rad = {draw(st.floats(0.0, 1e-3, **finite))!r}\nfrequency_hz = 10.0\n"
    return parse_scenario(doc)


@settings(max_examples=60, deadline=None)
@given(configs())
def test_serialize_parse_round_trip(cfg):
    text = serialize(cfg)
    again = parse_scenario(text)
    assert again == cfg
    assert serialize(again) == text
    # a fully explicit file leaves nothing to default
    assert again.provenance == () or all(e.key.endswith("slope_w_per_c") for e in again.provenance)


def test_edfa_settings_calibrate_to_defaults():
    model = EdfaSettings().model()
    assert model.p0_w == 2.5
    assert math.isclose(model.slope_w_per_c, 0.0964574, rel_tol=1e-6)


def test_drone_waypoints_parse():
    cfg = parse_scenario(
        '[scenario]\nkind = "DRONE_GROUND"\n[platform_a]\nkind = "DRONE"\n'
        "waypoints = [[0.0, 35.0, 139.0], [60.0, 35.001, 139.0]]\n"
    )
    assert cfg.platform_a.waypoints[1] == (60.0, 35.001, 139.0)
    assert isinstance(cfg.platform_b, PlatformSpec)
