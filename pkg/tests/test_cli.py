import json

import pytest

from robustgrowth import cli
from robustgrowth.config import dumps, load_config, preset_names, validate
from robustgrowth.errors import ValidationError


def run(tmp_path, *args):
    return cli.main(list(args) + ["--out", str(tmp_path), "--quiet"])


def test_every_preset_validates():
    names = preset_names()
    assert len(names) >= 9
    for name in names:
        assert load_config(name)["schema"] == 1


def test_schema_errors_name_the_key_path():
    cfg = load_config("cir_a3_b2")
    cfg["simulation"]["dt"] = -1.0
    with pytest.raises(ValidationError, match=r"simulation\.dt"):
        validate(cfg, "config")
    del cfg["schema"]
    with pytest.raises(ValidationError, match="schema"):
        validate(cfg, "config")


def test_json_output_is_deterministic_and_encodes_infinity():
    doc = {"b": float("inf"), "a": [1, 2.5]}
    text = dumps(doc)
    assert text == dumps(doc)
    assert json.loads(text) == {"a": [1, 2.5], "b": "inf"}


def test_solve_cir(tmp_path):
    assert run(tmp_path, "solve", "--config", "cir_a3_b2") == 0
    report = json.loads((tmp_path / "report.json").read_text())
    validate(report, "report")
    assert report["classification"] == "Finite"
    assert report["lambda"] == pytest.approx(0.375, rel=1e-6)
    header = (tmp_path / "strategy.csv").read_text().splitlines()[0]
    assert header == "x1,phi,strategy1"


def test_classify_flat_interval(tmp_path):
    assert run(tmp_path, "classify", "--config", "unit_interval_flat") == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["classification"] == "IllPosedOrEmpty" and report["lambda"] is None


def test_config_file_path(tmp_path):
    cfg = load_config("gaussian")
    path = tmp_path / "mine.json"
    path.write_text(json.dumps(cfg))
    assert run(tmp_path, "solve", "--config", str(path)) == 0


def test_invalid_config_exits_with_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema": 2, "name": "x"}))
    assert run(tmp_path, "solve", "--config", str(bad)) == 1
    assert "schema" in capsys.readouterr().err
    assert run(tmp_path, "solve", "--config", "no_such_preset") == 1


def test_explosion_exits_with_two(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--config", "unit_interval_flat") == 2
    assert "AllPathsExploded" in capsys.readouterr().err


def test_simulate_writes_tables(tmp_path):
    code = run(tmp_path, "simulate", "--config", "cir_a3_b2", "--horizon", "20", "--paths", "2",
               "--seed", "3")
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    validate(summary, "simulate")
    assert summary["horizon"] == 20.0 and summary["paths"] == 2 and summary["seed"] == 3
    assert (tmp_path / "wealth_worst_case.csv").exists()
    assert (tmp_path / "occupancy_worst_case.csv").exists()


def test_rank_demo(tmp_path):
    assert run(tmp_path, "rank-demo", "--config", "rank_demo", "--grid-level", "4") == 0
    doc = json.loads((tmp_path / "rank_demo.json").read_text())
    validate(doc, "rank_demo")
    assert doc["relative_difference"] <= 1e-6
    assert doc["theta_market"]["exploded"] == 0
    assert (tmp_path / "rank_strategy.csv").exists()


def test_rank_demo_needs_rank_config(tmp_path):
    assert run(tmp_path, "rank-demo", "--config", "gaussian") == 1


def test_bad_override_is_rejected(tmp_path):
    with pytest.raises(SystemExit):
        run(tmp_path, "simulate", "--config", "gaussian", "--dt", "-1")


def test_verify_gaussian_passes_and_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["verify", "--config", "gaussian", "--seed", "7", "--out", str(a)]) == 0
    out = capsys.readouterr().out
    assert "PASS [2]" in out and "FAIL" not in out
    assert cli.main(["verify", "--config", "gaussian", "--seed", "7", "--out", str(b), "--quiet"]) == 0
    assert (a / "verify.json").read_bytes() == (b / "verify.json").read_bytes()
    validate(json.loads((a / "verify.json").read_text()), "verify")
