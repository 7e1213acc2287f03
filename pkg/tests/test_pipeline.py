import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import flat_disc
from tangentnet.convex import Ball
from tangentnet.curve import AnalyticMap, Domain, double_points
from tangentnet.pipeline import (EXIT_FAIL, EXIT_OK, EXIT_USAGE, ConfigError, RunConfig, RunReport, StageError,
                                 boundary_net, cli_main, crossing_length, image_completeness_audit,
                                 region_double_points, reparametrize, run_recursion, schedule_check)
from tangentnet.stretch import PolarGrid, trim_to_component

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).parent / "golden"


def planted():
    """(z - 0.1)(z - 0.9) (1, z): the parameters 0.1 and 0.9 share the image 0."""
    return AnalyticMap.polynomial([0.09, -1.0, 1.0], [0, 0.09, -1.0, 1.0], radius=1.2)


# --- configuration and schedule ----------------------------------------------------------------


def test_config_validation():
    cfg = RunConfig.from_dict({"bodies": {"balls": [1, 2]}, "eps0": 0.5})
    assert len(cfg.validate()) == 2
    with pytest.raises(ConfigError, match="eps0"):
        RunConfig.from_dict({"bodies": {"balls": [1, 2]}, "eps0": 1.0}).validate()
    with pytest.raises(ConfigError, match="eps0"):
        RunConfig.from_dict({"bodies": {"balls": [1, 1.3]}, "eps0": 0.5}).validate()
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig.from_dict({"bodies": {"balls": [1, 2]}, "epsilon": 0.5})
    with pytest.raises(ConfigError, match="depth"):
        RunConfig.from_dict({"bodies": {"balls": [1, 2]}, "depth": 2}).validate()
    with pytest.raises(ConfigError, match="eps_ratio"):
        RunConfig.from_dict({"bodies": {"balls": [1, 2, 3]}, "eps_ratio": 0.5}).validate()
    with pytest.raises(ConfigError):
        RunConfig.load(CONFIGS / "missing.json")


def test_shipped_configs_validate():
    for p in sorted(CONFIGS.glob("*.json")):
        RunConfig.load(p).validate()
    chain = RunConfig.load(CONFIGS / "chain3.json").body_list()
    assert [b.radius for b in chain] == pytest.approx([1.0, 2.6414031750, 3.0517539688, 3.7])


def test_schedule_examples():
    assert schedule_check([0.9, 0.405, 0.18225])
    assert not schedule_check([1.0, 0.6])
    assert schedule_check([0.3])
    assert RunConfig.from_dict({"bodies": [], "eps0": 0.8, "depth": 3}).schedule() == pytest.approx([0.8, 0.36, 0.162])


@given(st.floats(0.01, 0.499), st.integers(1, 12), st.floats(0.01, 0.99))
def test_schedule_halving(ratio, depth, eps0):
    eps = RunConfig.from_dict({"bodies": [], "eps0": eps0, "eps_ratio": ratio, "depth": depth}).schedule()
    assert schedule_check(eps)
    assert sum(eps) < 2 * eps[0]


# --- measurements -------------------------------------------------------------------------------


def test_crossing_flat_disc_radial():
    X = AnalyticMap.polynomial([0, 1], [0])
    grid = PolarGrid.make(1.0, (41, 256))
    mask = np.ones((256, 41), bool)
    cr = crossing_length(X, grid, mask, 0.25)
    assert cr.value == pytest.approx(0.75, abs=1e-12)
    assert cr.value - cr.slack <= 0.75 and cr.glued == 0
    assert abs(cr.path[0]) <= 0.25 + 0.025 + 1e-12 and abs(cr.path[-1]) == pytest.approx(1.0)


def test_crossing_noncircular_region():
    X = AnalyticMap.polynomial([0, 1], [0])
    grid = PolarGrid.make(1.0, (201, 800))
    z = grid.z
    mask = np.abs(z) < 0.6 + 0.2 * np.cos(np.angle(z))
    cr = crossing_length(X, grid, mask, 0.1)
    dr = grid.r[1]
    # the region's nearest frontier point is at radius 0.4 (angle pi)
    assert 0.3 - dr <= cr.value <= 0.3 + cr.slack + dr


def test_region_double_points_planted():
    X = planted()
    region = trim_to_component(X, Ball(50.0), (121, 600))
    dps, unresolved = region_double_points(X, region)
    assert len(dps) == 1 and unresolved == 0
    assert sorted([dps[0].P.real, dps[0].Q.real]) == pytest.approx([0.1, 0.9], abs=1e-10)
    assert dps[0].normal_crossing
    assert double_points(X)[0].w == pytest.approx(dps[0].w, abs=1e-10)


def test_reparametrize():
    X = flat_disc().with_domain(Domain(1.5))
    round_region = trim_to_component(X, Ball(1.0 + 0.3), (240, 1200))
    Y = reparametrize(X, round_region)
    # |X(z)|^2 = 0.96 |z|^2 + 0.04 reaches 1.69 at |z| = sqrt(1.65 / 0.96)
    assert Y.domain.outer == pytest.approx(math.sqrt(1.65 / 0.96), rel=1e-3)
    skew = trim_to_component(X, Ball(1.3, np.array([0.3, 0, 0, 0])), (240, 1200))
    with pytest.raises(StageError, match="round disc"):
        reparametrize(X, skew)


def test_boundary_net():
    X = flat_disc()
    net = boundary_net(X, Ball(1.0), 0.9, 6)
    assert len(net) == 6 and np.allclose(Ball(1.0).gauge(net.skeleton), 1)
    with pytest.raises(StageError):
        boundary_net(X, Ball(1.0), 0.05, 6)
    with pytest.raises(ConfigError):
        boundary_net(X, Ball(1.0), 0.9, 2)


# --- the audit --------------------------------------------------------------------------------------


def _report(X, dee=0.3, eps=0.1, doubles=True):
    it = {"n": 1, "dee": dee, "eps": eps}
    if doubles:
        it["double_points"] = [d.to_dict() for d in double_points(X)]
    return {"config": {}, "iterations": [it]}


def test_audit_empty_and_missing():
    X = flat_disc()
    res = image_completeness_audit(X, RunReport({}, [], True))
    assert (res.measured, res.ledger, res.slack) == (0.0, 0.0, 0.0) and res.ok
    with pytest.raises(ValueError, match="double-point"):
        image_completeness_audit(X, _report(X, doubles=False))


def test_audit_embedding_equals_intrinsic():
    X = flat_disc()
    res = image_completeness_audit(X, _report(X), (41, 256))
    plain = crossing_length(X, PolarGrid.make(1.0, (41, 256)), np.ones((256, 41), bool), 0.0)
    assert res.measured == plain.value
    assert res.ledger == pytest.approx(0.2) and res.ok


def test_audit_planted_crossing_shortcut():
    X = planted()
    grid = PolarGrid.make(1.2, (121, 600))
    mask = np.ones((600, 121), bool)
    plain = crossing_length(X, grid, mask, 0.15)
    res = image_completeness_audit(X, _report(X, dee=0.2, eps=0.1), (121, 600), inner=0.15)
    glued = crossing_length(X, grid, mask, 0.15, double_points(X))
    assert glued.glued == 1 and res.measured == glued.value
    assert res.measured < plain.value
    # the shortcut starts inside the inner disc, so the ledger is untouched by it
    assert res.measured + res.slack >= res.ledger


# --- CLI ------------------------------------------------------------------------------------------


def test_cli_usage_errors(tmp_path, capsys):
    assert cli_main(["bodies", "--config", str(CONFIGS / "balls12.json"), "--bogus"]) == EXIT_USAGE
    assert cli_main(["bodies"]) == EXIT_USAGE
    assert cli_main(["frobnicate"]) == EXIT_USAGE
    assert cli_main(["bodies", "--config", str(tmp_path / "none.json")]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bodies": {"balls": [1, 2]}, "eps0": 1.5}))
    assert cli_main(["bodies", "--config", str(bad)]) == EXIT_USAGE


def test_cli_bodies_golden(tmp_path):
    assert cli_main(["bodies", "--config", str(CONFIGS / "balls12.json"), "--out", str(tmp_path)]) == EXIT_OK
    got = json.loads((tmp_path / "bodies.json").read_text())
    want = json.loads((GOLDEN / "bodies_balls12.json").read_text())
    assert got == want
    assert got["pairs"][0]["dee"] == pytest.approx(2 / math.sqrt(3), abs=1e-12)


def test_cli_exhaust_and_net(tmp_path):
    assert cli_main(["exhaust", "--config", str(CONFIGS / "exhaust6.json"), "--out", str(tmp_path)]) == EXIT_OK
    seq = json.loads((tmp_path / "exhaust.json").read_text())["sequence"]
    assert seq["success"] and seq["running"][-1] >= 5
    assert cli_main(["net", "--config", str(CONFIGS / "balls12.json"), "--out", str(tmp_path)]) == EXIT_OK
    out = json.loads((tmp_path / "net.json").read_text())
    assert out["dee"] == pytest.approx(1.1547, abs=1e-4)
    assert out["bound"] >= 2 / math.sqrt(3) - 0.1
    assert out["oracle_min"] + out["oracle"]["slack"] >= out["bound"]


def test_cli_desing(tmp_path):
    assert cli_main(["desing", "--config", str(CONFIGS / "flatdisc.json"), "--out", str(tmp_path)]) == EXIT_OK
    sweep = json.loads((tmp_path / "desing.json").read_text())["sweep"]
    assert sweep["chosen"] is not None and all(r["regular"] for r in sweep["rows"])


def test_cli_out_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TANGENTNET_OUT", str(tmp_path))
    assert cli_main(["bodies", "--config", str(CONFIGS / "balls12.json")]) == EXIT_OK
    assert (tmp_path / "bodies" / "bodies.json").exists()


@pytest.fixture(scope="session")
def cli_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    rc = cli_main(["run", "--depth", "1", "--config", str(CONFIGS / "flatdisc.json"), "--out", str(out)])
    return rc, out


@pytest.mark.slow
def test_cli_run_depth_one(cli_run):
    rc, out = cli_run
    assert rc == EXIT_OK
    assert {p.name for p in out.iterdir()} >= {"report.json", "curve.json", "boundary.csv"}
    rep = json.loads((out / "report.json").read_text())
    assert rep["schema"] == "1.0" and rep["status"] == "pass" and rep["schedule_ok"]
    it = rep["iterations"][0]
    assert all(c["ok"] for c in it["checks"].values())
    assert it["checks"]["G"]["value"] - it["checks"]["G"]["slack"] >= it["dee"] - it["eps"]
    assert rep["budget"] == sum(i["dee"] - i["eps"] for i in rep["iterations"])
    assert it["one_form_waiver"] and it["desing"]["status"] == "off"
    curve = AnalyticMap.from_dict(json.loads((out / "curve.json").read_text()))
    assert curve.domain.outer == pytest.approx(1.6)


@pytest.mark.slow
def test_run_reproducible(cli_run, tmp_path):
    rc, out = cli_run
    cfg = RunConfig.load(CONFIGS / "flatdisc.json")
    cfg.out = str(tmp_path)
    rep, _, _ = run_recursion(cfg)
    assert (tmp_path / "report.json").read_bytes() == (out / "report.json").read_bytes()
    assert (tmp_path / "curve.json").read_bytes() == (out / "curve.json").read_bytes()
