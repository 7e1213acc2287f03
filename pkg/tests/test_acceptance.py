"""The eight acceptance criteria, one test each, at their stated tolerances.

A verdict line per criterion is printed in the terminal summary (see conftest).
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from tangentnet.convex import (Ball, Ellipsoid, d_proper_sequence, dee, harmonic_threshold, parallel_body,
                               refine_pair)
from tangentnet.curve import AnalyticMap, double_points
from tangentnet.desing import BivariatePolynomial, critical_points, implicitize, level_shift, proximity_check, \
    sample_level
from tangentnet.net import BoundaryArcSet, TangentNet, analytic_lower_bound, build_net, min_path_length
from tangentnet.pipeline import RunConfig, image_completeness_audit, run_recursion
from test_convex import E4, section_curvature

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.criterion(1, "dee(Ball 1, Ball 2) = 2/sqrt(3); dee > dist on 1000 pairs; < 5 s")
def test_c1_dee():
    t0 = time.perf_counter()
    assert abs(dee(Ball(1.0), Ball(2.0)).dee - 2 / math.sqrt(3)) < 1e-9
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(500):
        r = rng.uniform(0.2, 3.0)
        R = r * rng.uniform(1.05, 3.0)
        c = rng.standard_normal(4)
        c *= (R - r) * rng.uniform(0, 0.9) / np.linalg.norm(c)
        pm = dee(Ball(r), Ball(R, c))
        assert pm.dee > pm.dist
        checked += 1
    for _ in range(500):
        E = Ellipsoid(E4 * rng.uniform(0.5, 2.0))
        pm = dee(E, parallel_body(E, rng.uniform(0.01, 3.0)))
        assert pm.dee > pm.dist
        checked += 1
    elapsed = time.perf_counter() - t0
    print(f"C1: {checked} pairs in {elapsed:.2f} s")
    assert checked == 1000 and elapsed < 5


@pytest.mark.criterion(2, "sqrt(t)/dee -> sqrt(2): 1% at t=1e-4, 0.1% at t=1e-6")
def test_c2_limit():
    for t, tol in ((1e-4, 1e-2), (1e-6, 1e-3)):
        ratio = math.sqrt(t) / dee(Ball(1.0), Ball(1.0 + t)).dee
        print(f"C2: t={t:g} ratio={ratio:.9f}")
        assert abs(ratio / math.sqrt(2) - 1) < tol


@pytest.mark.criterion(3, "refine_pair m=4, chain dee-sum >= 1; targets <= 5 on six balls; < 10 s")
def test_c3_refine():
    t0 = time.perf_counter()
    assert harmonic_threshold(1.0, 1.0) == pytest.approx(2.0712, abs=1e-4)
    chain = refine_pair(Ball(1.0), Ball(2.0)) + [Ball(2.0)]
    assert len(chain) - 2 == 4
    total = sum(dee(a, b).dee for a, b in zip(chain, chain[1:]))
    assert total >= 1
    balls = [Ball(float(r)) for r in range(1, 7)]
    for target in np.linspace(0.5, 5.0, 10):
        seq = d_proper_sequence(balls, float(target))
        assert seq.success and seq.running[-1] >= target
    elapsed = time.perf_counter() - t0
    print(f"C3: chain sum {total:.4f}, {elapsed:.2f} s")
    assert elapsed < 10


@pytest.mark.criterion(4, "kappa(D_t) = kappa/(1 + t kappa) within 1e-6, balls and an ellipsoid")
def test_c4_parallel_curvature():
    for body in (Ball(1.0), Ball(2.5), Ellipsoid(E4)):
        k = body.kappa_max()
        for t in (-0.5, 0.5, 1.0, 2.0):
            P = parallel_body(body, t)
            want = k / (1 + t * k)
            fitted = section_curvature(P, 0, 1, 2e-3)
            print(f"C4: {type(body).__name__} t={t:+.1f} kappa={P.kappa_max():.9f} fit={fitted:.9f} want={want:.9f}")
            assert abs(P.kappa_max() - want) < 1e-6
            assert abs(fitted - want) < 1e-6


@pytest.mark.criterion(5, "net oracle >= bound - slack, bound >= 2/sqrt(3) - 0.1; single slab sqrt(3); < 60 s")
def test_c5_net():
    D, Dp = Ball(1.0), Ball(2.0)
    t = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    circle = np.stack([np.cos(t), np.sin(t), 0 * t, 0 * t], 1)
    net = build_net(BoundaryArcSet.from_directions(D, [circle], [True]), D, Dp, 0.1)
    bound = analytic_lower_bound(net, D, Dp)
    t0 = time.perf_counter()
    orc = min_path_length(net, D, Dp, resolution=0.23)
    elapsed = time.perf_counter() - t0
    print(f"C5: m={net.m} bound={bound:.6f} oracle={orc.min_length:.6f} slack={orc.slack:.4f} "
          f"nodes={orc.nodes} {elapsed:.1f} s")
    assert bound >= 2 / math.sqrt(3) - 0.1
    assert orc.reachable and orc.min_length >= bound - orc.slack
    assert orc.nodes >= 10**5 * 0.9 and elapsed < 60
    single = min_path_length(TangentNet(D, np.array([[1, 0]], complex), 1e-6), D, Dp)
    assert abs(single.min_length / math.sqrt(3) - 1) < 0.01


@pytest.mark.criterion(6, "flagship stretch: (2_n) < 1e-12, drift < delta, boundary on Fr D', D_delta u T; < 120 s")
def test_c6_stretch(flagship):
    rep, region, Y = flagship["report"], flagship["region"], flagship["Y"]
    worst_2n = max(item["value"] for item in rep["2_n"])
    drift = rep["b"]["value"]
    delta = rep["params"]["delta"]
    g = Ball(2.0).gauge(Y(region.boundary))
    print(f"C6: (2_n) max {worst_2n:.2e}, drift {drift:.2e} < {delta}, boundary gauge error "
          f"{np.abs(g - 1).max():.2e}, samples {rep['e']['samples']}, {flagship['seconds']:.1f} s")
    assert len(rep["2_n"]) == rep["params"]["J"] and worst_2n < 1e-12
    assert drift < delta and rep["budget"]["consumed"] + rep["budget"]["mergelyan"] < delta
    assert np.abs(g - 1).max() < 1e-2
    assert rep["e"]["samples"] >= 10**4 and rep["e"]["ok"]
    assert flagship["seconds"] < 120


@pytest.mark.criterion(7, "zeta xi = 0.01 regular, |grad| = sqrt(2 lam), proximity 0.1; nodal cubic node")
def test_c7_desing():
    lam = 0.01
    P = BivariatePolynomial(np.array([[0, 0], [0, 1]]))
    unit = Ball(1.0)
    C, regular = level_shift(P, lam, unit)
    prox = proximity_check(C, sample_level(P, 0, unit), unit)
    print(f"C7: regular={regular} min_grad={C.min_grad:.6f} proximity={prox:.6f}")
    assert regular
    assert abs(C.min_grad / math.sqrt(2 * lam) - 1) < 0.05
    assert abs(prox / 0.1 - 1) < 0.1
    X = AnalyticMap.polynomial([0, 0, 1], [0, -1, 0, 1], radius=1.5)
    cps = critical_points(implicitize(X), Ball(2.5))
    dps = double_points(X)
    print(f"C7: critical points {[c.point.round(9).tolist() for c in cps]}, det {[c.det for c in cps]}")
    assert len(cps) == 1 and abs(cps[0].det) > 0 and len(dps) == 1
    assert np.linalg.norm(cps[0].point - dps[0].w) < 1e-6


@pytest.mark.xfail(strict=True, reason="the second stretch needs a conformal reparametrization of a non-round "
                   "trimmed region; the run stops at iteration 2")
@pytest.mark.criterion(8, "N = 3 over a refined ball chain: budget, audit, halving, < 10 min, reproducible")
def test_c8_pipeline(tmp_path):
    reports = []
    for k in range(2):
        cfg = RunConfig.load(CONFIGS / "chain3.json")
        cfg.out = str(tmp_path / f"run{k}")
        t0 = time.perf_counter()
        rep, X, region = run_recursion(cfg)
        elapsed = time.perf_counter() - t0
        reports.append((rep, X, region, elapsed))
    rep, X, region, elapsed = reports[0]
    same = (tmp_path / "run0" / "report.json").read_bytes() == (tmp_path / "run1" / "report.json").read_bytes()
    eps = rep.schedule
    print(f"C8: status={rep.status} failure={rep.failure} budget={rep.budget:.4f} schedule_ok={rep.schedule_ok} "
          f"reproducible={same} {elapsed:.1f} s")
    assert same and rep.schedule_ok and elapsed < 600
    assert len(rep.iterations) == 3 and rep.ok
    assert rep.budget >= 1 - sum(eps)
    audit = image_completeness_audit(X, rep, region=region)
    print(f"C8: audit {json.dumps(audit.to_dict())}")
    assert audit.measured >= rep.budget - audit.slack
