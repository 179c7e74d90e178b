import math
from pathlib import Path

import numpy as np
import pytest

import obstacle_spde as ospde

ROOT = Path(__file__).resolve().parents[2]
MINIMAL = """
problem:
  grid: {dim: 1, extent: [1.0], nodes: [17]}
  time: {horizon: 0.1, steps: 10}
run: {seed: 7}
"""


def test_zero_data_is_zero():
    out = ospde.simulate(ospde.parse_config(MINIMAL))
    assert out["u"].shape == (11, 17)
    assert not out["u"].any()
    assert out["obstacle"] is None


def test_heat_decay():
    cfg = ospde.load_config(str(ROOT / "configs" / "heat.yaml"))
    out = ospde.simulate(cfg)
    exact = np.exp(-math.pi**2 * out["t"][:, None]) * np.sin(math.pi * out["x"][:, 0])[None, :]
    assert np.abs(out["u"] - exact).max() < 1e-3


def test_obstacle_respected():
    cfg = ospde.load_config(str(ROOT / "configs" / "skorohod.yaml"))
    out = ospde.simulate(cfg, path=3)
    assert (out["u"] >= out["obstacle"] - 1e-12).all()
    assert (out["nu"] >= 0).all()


def test_unknown_key():
    with pytest.raises(ospde.ConfigError, match="did you mean 'penalty'"):
        ospde.parse_config(MINIMAL + "scheme: {method: penalized, penaltyy: 1}\n")


def test_verify_report():
    cfg = ospde.load_config(str(ROOT / "configs" / "comparison.yaml"))
    cfg.paths = 5
    report = ospde.verify(cfg)
    assert [e["name"] for e in report["checks"]] == ["comparison"]
    assert report["checks"][0]["status"] == "pass"


def test_manifest_round_trip():
    cfg = ospde.load_config(str(ROOT / "configs" / "oracle.yaml"))
    assert cfg.manifest("convergence")["manifest"]["subcommand"] == "convergence"
    assert cfg.to_dict()["run"]["seed"] == 7


def test_gates():
    g = ospde.check_constants(3.0, 1.0, 0.2)
    assert g["h_contraction"] and not g["mp_condition"]
    assert g["mp_lhs"] == pytest.approx(3.9)


def test_run_exit_code(tmp_path):
    cfg = ospde.load_config(str(ROOT / "configs" / "comparison_negative.yaml"))
    cfg.paths = 3
    cfg.out = str(tmp_path)
    code, _ = ospde.run(cfg, "verify")
    assert code == 1
    assert (tmp_path / "report.json").exists()
