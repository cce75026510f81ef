from __future__ import annotations

import json

import pytest

from lasercom_twin import cli, runner
from lasercom_twin.errors import SimulationError
from lasercom_twin.link_budget import CANONICAL_TERMS


def test_budget_prints_one_term_per_line(capsys, scenarios):
    assert cli.main(["budget", str(scenarios / "geo_ground.toml"), "--at", "0"]) == 0
    out = capsys.readouterr().out.splitlines()
    for term in CANONICAL_TERMS:
        line = next(line for line in out if line.split()[0] == term)
        assert line.endswith("dB") or line.endswith("dBm")
        float(line.split()[1])


def test_budget_json(capsys, scenarios):
    assert cli.main(["budget", str(scenarios / "geo_ground.toml"), "--at", "5", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["status"] == "OK" and "free_space_loss" in data["terms_db"]


def test_missing_file_exits_1_with_name(capsys, tmp_path):
    missing = tmp_path / "absent_scenario.toml"
    assert cli.main(["run", str(missing)]) == 1
    assert "absent_scenario.toml" in capsys.readouterr().err


def test_bad_config_exits_1(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('[scenario]\nkind = "GEO_GROUND"\n[pat]\nfine_fov_rad = 1.0\n')
    assert cli.main(["run", str(bad)]) == 1
    assert "fine detector FOV" in capsys.readouterr().err


def test_runtime_error_exits_2(monkeypatch, capsys, scenarios, tmp_path):
    def fail(cfg):
        raise SimulationError("pat", 12, RuntimeError("diverged"))

    monkeypatch.setattr(runner, "simulate", fail)
    assert cli.main(["run", str(scenarios / "geo_ground.toml"), "--out", str(tmp_path)]) == 2
    assert "pat failed at step 12" in capsys.readouterr().err


def test_run_prints_paths_and_is_reproducible(capsys, scenarios, tmp_path):
    args = ["run", str(scenarios / "haps_ground.toml"), "--seed", "99"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    paths = capsys.readouterr().out.split()
    assert [p.rsplit("/", 1)[1] for p in paths] == ["timeseries.csv", "summary.json"]
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("timeseries.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert json.loads((tmp_path / "a" / "summary.json").read_text())["seed"] == 99


def test_seed_from_environment(monkeypatch, scenarios, tmp_path):
    monkeypatch.setenv(cli.SEED_ENV, "1234")
    assert cli.main(["run", str(scenarios / "haps_ground.toml"), "--out", str(tmp_path / "env")]) == 0
    assert json.loads((tmp_path / "env" / "summary.json").read_text())["seed"] == 1234
    assert cli.main(["run", str(scenarios / "haps_ground.toml"), "--seed", "5", "--out", str(tmp_path / "flag")]) == 0
    assert json.loads((tmp_path / "flag" / "summary.json").read_text())["seed"] == 5


def test_bad_seed_exits_1(monkeypatch, scenarios):
    monkeypatch.setenv(cli.SEED_ENV, "-3")
    assert cli.main(["run", str(scenarios / "haps_ground.toml")]) == 1


def test_passes_json(capsys, scenarios):
    assert cli.main(["passes", str(scenarios / "leo_ground.toml"), "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows and all(r["duration_s"] < 600 for r in rows)


def test_passes_written_to_out(capsys, scenarios, tmp_path):
    assert cli.main(["passes", str(scenarios / "leo_ground.toml"), "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip() == str(tmp_path / "passes.csv")
    assert (tmp_path / "passes.csv").read_text().startswith("rise_s,set_s")


def test_calibrate_edfa(capsys, scenarios):
    assert cli.main(["calibrate-edfa", str(scenarios / "leo_ground.toml"), "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["p0_w"] == 2.5 and data["min_power_to_t1_w"] >= 2.0
    assert cli.main(["calibrate-edfa", str(scenarios / "geo_ground.toml")]) == 1


def test_usage_error_exits_1(capsys):
    assert cli.main(["budget", "x.toml"]) == 1


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_run_formats(fmt, scenarios, tmp_path, capsys):
    assert cli.main(["run", str(scenarios / "geo_ground.toml"), "--format", fmt, "--out", str(tmp_path)]) == 0
    assert (tmp_path / f"timeseries.{fmt}").exists()
