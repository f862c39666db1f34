from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from argmaxlab.errors import ConfigurationError
from argmaxlab.harness.cli import main
from argmaxlab.harness.config import ExperimentConfig
from argmaxlab.harness.experiments import (Report, lpp_geodesic_experiment, merge_reports,
                                           run_experiment)

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.json"))

BM_SMALL = {"kind": "identity-1d", "name": "bm-small",
            "process": {"kernel": {"family": "BrownianMotion"}},
            "grid": {"kind": "uniform", "n": 256}, "anchors": [1.0],
            "replicates": 2000, "seed": 1}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg, indent=2))
    return p


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_config_round_trip_is_idempotent(path):
    cfg = ExperimentConfig.load(path)
    once = cfg.to_json()
    twice = ExperimentConfig.from_json(once).to_json()
    assert once == twice


def test_overrides():
    cfg = ExperimentConfig.from_dict(BM_SMALL).with_overrides(seed=5, replicates=10, grid_n=64)
    d = cfg.to_dict()
    assert d["seed"] == 5 and d["replicates"] == 10 and d["grid"]["n"] == 64


def test_schema_diagnostics_name_line_and_field():
    text = json.dumps(dict(BM_SMALL, replicates="many"), indent=2)
    with pytest.raises(ConfigurationError) as exc:
        ExperimentConfig.from_json(text, source="bad.json")
    msg = str(exc.value)
    line = next(i for i, l in enumerate(text.splitlines(), 1) if '"replicates"' in l)
    assert f"bad.json:{line}" in msg and "replicates" in msg
    with pytest.raises(ConfigurationError) as exc:
        ExperimentConfig.from_json('{"kind": "identity-1d",\n  "seed": }', source="x.json")
    assert "x.json:2" in str(exc.value)
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict(dict(BM_SMALL, replicates=1))
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict(dict(BM_SMALL, kind="nonsense"))
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({k: v for k, v in BM_SMALL.items() if k != "process"})


def test_report_is_deterministic_apart_from_timing(tmp_path):
    a = run_experiment(BM_SMALL)
    b = run_experiment(ExperimentConfig.from_dict(BM_SMALL))
    assert a.to_json(include_timing=False) == b.to_json(include_timing=False)
    a.write(tmp_path / "a")
    b.write(tmp_path / "b")
    da = json.loads((tmp_path / "a" / "report.json").read_text())
    db = json.loads((tmp_path / "b" / "report.json").read_text())
    da.pop("timing"), db.pop("timing")
    assert da == db
    assert (tmp_path / "a" / "tables.csv").read_text() == (tmp_path / "b" / "tables.csv").read_text()
    back = Report.from_dict(json.loads((tmp_path / "a" / "report.json").read_text()))
    assert back.to_json(include_timing=False) == a.to_json(include_timing=False)


def test_cli_identity_and_merge(tmp_path, capsys):
    cfg = _write(tmp_path, BM_SMALL)
    assert main(["verify-identity", "--config", str(cfg), "--out", str(tmp_path / "r1")]) == 0
    assert main(["verify-identity", "--config", str(cfg), "--seed", "2",
                 "--out", str(tmp_path / "r2")]) == 0
    header = (tmp_path / "r1" / "tables.csv").read_text().splitlines()[0]
    assert header == "experiment,lhs,lhs_se,rhs,rhs_se,z,n"
    assert main(["report-merge", str(tmp_path / "r1" / "report.json"),
                 str(tmp_path / "r2" / "report.json"), "--out", str(tmp_path / "m")]) == 0
    r1 = json.loads((tmp_path / "r1" / "report.json").read_text())
    m = json.loads((tmp_path / "m" / "report.json").read_text())
    one, pooled = r1["identities"][0], m["identities"][0]
    assert pooled["n"] == 2 * one["n"]
    assert pooled["lhs_se"] < one["lhs_se"] and pooled["rhs_se"] < one["rhs_se"]
    # merging a report with itself is rejected (duplicate seed)
    assert main(["report-merge", str(tmp_path / "r1" / "report.json"),
                 str(tmp_path / "r1" / "report.json"), "--out", str(tmp_path / "x")]) == 2


def test_merge_rejects_different_configs():
    a = run_experiment(dict(BM_SMALL, replicates=200))
    b = run_experiment(dict(BM_SMALL, replicates=200, seed=3, grid={"kind": "uniform", "n": 128}))
    with pytest.raises(ConfigurationError):
        merge_reports([a, b])


def test_cli_non_diagonal_anchors_exit_two(tmp_path, capsys):
    cfg = _write(tmp_path, {"kind": "bridge-check", "name": "nd",
                            "process": {"kernel": {"family": "BrownianMotion"}},
                            "grid": {"kind": "uniform", "n": 8}, "anchors": [0.5, 1.0],
                            "replicates": 100, "seed": 1})
    assert main(["verify-bridge", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "condition 1" in err and "diagonal" in err


def test_cli_config_errors_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "identity-1d", "replicates": -3}')
    assert main(["verify-identity", "--config", str(bad)]) == 2
    assert "bad.json:1" in capsys.readouterr().err
    cfg = _write(tmp_path, BM_SMALL)
    assert main(["verify-bridge", "--config", str(cfg)]) == 2


def test_levy_cases_increasing_drift():
    rep = run_experiment({"kind": "levy-cases", "name": "up",
                          "grid": {"kind": "uniform", "n": 256}, "replicates": 500, "seed": 1,
                          "cases": [{"name": "up", "levy": {"c": 1.0, "sigma": 0.0, "rate": 2.0},
                                     "expect": {"argmax_at_end": True}}]})
    case = rep.summary["cases"][0]
    assert case["uniqueness_frequency"] == 1.0
    assert case["L_mean"] == 1.0 and case["L_se"] == 0.0
    assert rep.passed


def test_derivative_kind_defaults():
    rep = run_experiment({"kind": "derivative", "name": "d",
                          "process": {"kernel": {"family": "BrownianMotion"}},
                          "grid": {"kind": "uniform", "n": 512}, "replicates": 4000, "seed": 2})
    os_ = rep.summary["one_sided"][0]
    for side in ("right", "left"):
        assert abs(os_[side] - 0.5) < 5 * os_[f"{side}_se"] + 0.02
    assert rep.passed


def test_bridge_check_brownian_anchor_one():
    rep = run_experiment({"kind": "bridge-check", "name": "b",
                          "process": {"kernel": {"family": "BrownianMotion"}},
                          "grid": {"kind": "uniform", "n": 63},
                          "law_grid": {"kind": "uniform", "n": 8}, "anchors": [1.0],
                          "replicates": 2000, "seed": 1})
    assert rep.summary["reconstruction"]["max_abs_residual"] <= 1e-12
    assert rep.passed


def test_lpp_geodesic_examples():
    one = lpp_geodesic_experiment(1, 128, 2000, 3)
    Z = one.summary["geodesic_increments_mean"][0]
    sym = next(r for r in one.identities if "1/2" in r.name)
    assert abs(sym.z) < 5 and abs(Z - 0.5) < 0.05
    two = lpp_geodesic_experiment(2, 512, 2000, 4)
    assert two.summary["uniqueness_frequency"] >= 0.99
    assert two.passed
    with pytest.raises(ConfigurationError):
        lpp_geodesic_experiment(5, 64, 10, 0)


def test_simulate_writes_paths(tmp_path):
    rep = run_experiment({"kind": "simulate", "name": "s",
                          "process": {"kernel": {"family": "FractionalBM", "H": 0.3}},
                          "grid": {"kind": "uniform", "n": 64}, "replicates": 2, "seed": 1})
    rep.write(tmp_path)
    rows = (tmp_path / "path.csv").read_text().splitlines()
    assert len(rows) == 66
    assert np.isfinite(np.loadtxt(tmp_path / "path.csv", delimiter=",", skiprows=1)).all()
