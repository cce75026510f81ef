from __future__ import annotations

import json
import math

import pytest

from lasercom_twin import link_budget, runner
from lasercom_twin.errors import ReportValidationError, SimulationError
from lasercom_twin.scenario import load_scenario, parse_scenario, with_seed

from . import oracles


def test_geo_ground_margin_matches_hand_ledger(scenarios):
    cfg = load_scenario(scenarios / "geo_ground.toml")
    summary = runner.run_scenario(cfg)
    table = summary.table
    for k in (0, len(table["t_s"]) // 2, len(table["t_s"]) - 1):
        el, rng = table["elevation_rad"][k], table["range_m"][k]
        assert table["margin_db"][k] == pytest.approx(oracles.hand_ledger(2.0, el, rng), abs=1e-9)


def test_ground_to_geo_elevation_and_range_agree_with_spherical_oracle(scenarios):
    cfg = load_scenario(scenarios / "geo_ground.toml")
    table = runner.run_scenario(cfg).table
    el, rng = table["elevation_rad"][0], table["range_m"][0]
    assert rng == pytest.approx(oracles.slant_range(35786e3, el), rel=1e-9)


def test_pat_disabled_emits_no_pat_columns(scenarios):
    summary = runner.run_scenario(load_scenario(scenarios / "geo_ground.toml"))
    assert summary.columns == ("t_s", "range_m", "elevation_rad", "alpha_rad", "rx_dbm", "margin_db")
    assert summary.residual_rms_rad is None and summary.time_to_linked_s is None


def test_full_column_set_with_edfa_and_pat(scenarios):
    summary = runner.run_scenario(load_scenario(scenarios / "geo_pat.toml"))
    assert summary.columns == runner.COLUMNS
    assert summary.time_to_linked_s is not None
    assert summary.table["mode"][-1] == "LINKED"


def test_aggregates_match_the_written_csv(tmp_path, scenarios):
    for name in ("geo_pat.toml", "leo_geo.toml", "haps_ground.toml"):
        summary = runner.run_scenario(load_scenario(scenarios / name), tmp_path / name)
        table = runner.read_csv((tmp_path / name / "timeseries.csv").read_text())
        again = runner.aggregates(table)
        written = json.loads((tmp_path / name / "summary.json").read_text())
        for key, value in again.items():
            mine = getattr(summary, key)
            if value is None:
                assert mine is None
            else:
                assert mine == pytest.approx(value, abs=1e-9)
        assert written["margin_db"]["min"] == summary.margin_min_db
        assert 0.0 <= summary.availability <= summary.visibility <= 1.0
        if summary.margin_min_db is not None:
            assert summary.margin_min_db <= summary.margin_median_db <= summary.margin_max_db


def test_runs_are_byte_identical(tmp_path, scenarios):
    cfg = load_scenario(scenarios / "geo_pat.toml")
    for fmt in ("csv", "json"):
        a = runner.run_scenario(cfg, tmp_path / f"a{fmt}", fmt)
        b = runner.run_scenario(cfg, tmp_path / f"b{fmt}", fmt)
        for pa, pb in zip(a.files, b.files):
            assert open(pa, "rb").read() == open(pb, "rb").read()


def test_seed_changes_the_noise(scenarios):
    cfg = load_scenario(scenarios / "haps_ground.toml")
    a = runner.run_scenario(cfg).table["margin_db"]
    b = runner.run_scenario(with_seed(cfg, 12)).table["margin_db"]
    assert a != b


def test_summary_embeds_provenance_once(tmp_path, scenarios):
    summary = runner.run_scenario(load_scenario(scenarios / "geo_ground.toml"), tmp_path)
    written = json.loads((tmp_path / "summary.json").read_text())
    keys = [e["key"] for e in written["provenance"]]
    assert len(keys) == len(set(keys)) > 0
    assert "receiver.photons_per_bit" in keys
    assert list(written) == [
        "kind", "seed", "samples", "margin_db", "availability", "visibility", "time_to_linked_s",
        "residual_rms_rad", "edfa_min_power_w", "passes", "warnings", "columns", "first_budget",
        "provenance",
    ]
    assert written["first_budget"]["status"] == "OK"
    assert summary.samples == 101


def test_day_of_leo_passes_are_short(scenarios):
    summary = runner.run_scenario(load_scenario(scenarios / "leo_ground.toml"))
    assert len(summary.passes) >= 3
    assert all(p.duration < 600.0 for p in summary.passes)
    assert any(w.startswith("long-link thermal warning") for w in summary.warnings)


def test_unavailable_rows_have_blank_budget(tmp_path, scenarios):
    runner.run_scenario(load_scenario(scenarios / "leo_geo.toml"), tmp_path)
    lines = (tmp_path / "timeseries.csv").read_text().splitlines()
    blanks = [line for line in lines[1:] if line.endswith(",,")]
    assert blanks and len(blanks) < len(lines) - 1


def test_module_failure_is_reported_with_step(monkeypatch, scenarios):
    cfg = load_scenario(scenarios / "geo_ground.toml")
    calls = {"n": 0}
    real = link_budget.evaluate

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 4:
            raise ReportValidationError("boom")
        return real(*args, **kwargs)

    monkeypatch.setattr(link_budget, "evaluate", flaky)
    with pytest.raises(SimulationError) as info:
        runner.run_scenario(cfg)
    assert info.value.module == "link_budget" and info.value.step == 3


def test_instant_budget_matches_run_sample(scenarios):
    cfg = load_scenario(scenarios / "geo_ground.toml")
    first = runner.run_scenario(cfg).first_budget
    assert runner.instant_budget(cfg, 0.0).to_dict() == first


def test_zero_amplifier_output_is_unavailable():
    cfg = parse_scenario(
        '[scenario]\nkind = "GEO_GROUND"\nduration_s = 7200.0\nstep_s = 600.0\n'
        "[edfa]\nslope_w_per_c = 0.2\np_min_w = 0.0\n"
    )
    summary = runner.run_scenario(cfg)
    assert summary.table["edfa_w"][-1] == 0.0
    assert summary.table["margin_db"][-1] is None
    assert math.isfinite(summary.margin_min_db)
