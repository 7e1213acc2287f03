import csv
import json
import math

import numpy as np
import pytest

from tangentnet.convex import Ball
from tangentnet.curve import AnalyticMap, double_points
from tangentnet.desing import (BivariatePolynomial, correspondence_check, critical_points, implicitize,
                               lambda_sweep, level_shift, proximity_check, sample_level, sweep_json,
                               write_critical_csv)

UNIT = Ball(1.0)


def zeta_xi():
    return BivariatePolynomial(np.array([[0, 0], [0, 1]]))


def nodal_cubic():
    return AnalyticMap.polynomial([0, 0, 1], [0, -1, 0, 1], radius=1.5)


def proportional(P, c):
    c = np.asarray(c, complex)
    k = np.unravel_index(np.argmax(np.abs(c)), c.shape)
    A = np.zeros(np.maximum(P.coeffs.shape, c.shape), complex)
    B = np.zeros_like(A)
    A[: P.coeffs.shape[0], : P.coeffs.shape[1]] = P.coeffs
    B[: c.shape[0], : c.shape[1]] = c
    return np.allclose(A * c[k] / A[k], B, atol=1e-10)


def test_implicitize_examples():
    assert proportional(implicitize(AnalyticMap.polynomial([0, 1], [0])), [[0, 1]])
    assert proportional(implicitize(AnalyticMap.polynomial([0, 1], [0, 0, 1])), [[0, -1], [0, 0], [1, 0]])
    # xi^2 = zeta (zeta - 1)^2 for (z^2, z^3 - z)
    P = implicitize(nodal_cubic())
    assert proportional(P, [[0, 0, -1], [1, 0, 0], [-2, 0, 0], [1, 0, 0]])
    z = np.random.default_rng(0).uniform(-1.5, 1.5, (1000, 2)) @ [1, 1j]
    q = nodal_cubic()(z)
    assert np.max(np.abs(P(q)) / P.scale(q)) < 1e-8


def test_implicitize_errors():
    with pytest.raises(ValueError):
        implicitize(AnalyticMap.polynomial([0, 1] + [0] * 12 + [1e-3], [0]))
    with pytest.raises(ValueError):
        BivariatePolynomial(np.zeros((2, 2)))


def test_critical_points_examples():
    cps = critical_points(zeta_xi(), UNIT)
    assert len(cps) == 1
    assert np.allclose(cps[0].point, 0, atol=1e-12)
    assert np.allclose(cps[0].hessian, [[0, 1], [1, 0]])
    assert cps[0].det != 0
    parabola = BivariatePolynomial(np.array([[0, -1], [0, 0], [1, 0]]))
    assert critical_points(parabola, UNIT) == []


def test_nodal_cubic_matches_double_point():
    P = implicitize(nodal_cubic())
    cps = critical_points(P, Ball(2.5))
    dps = [d for d in double_points(nodal_cubic()) if d.normal_crossing]
    assert len(cps) == 1 and len(dps) == 1
    assert np.linalg.norm(cps[0].point - dps[0].w) < 1e-6
    assert abs(cps[0].det) > 1


def test_level_shift_hyperbola():
    lam = 0.01
    C, reg = level_shift(zeta_xi(), lam, UNIT)
    assert reg
    assert np.abs(C.points[:, 0] * C.points[:, 1] - lam).max() < 1e-10
    # closed form: |grad| = |(xi, zeta)| >= sqrt(2 |zeta xi|) = sqrt(2 lam)
    assert C.min_grad >= math.sqrt(2 * lam) * (1 - 1e-9)
    assert C.min_grad == pytest.approx(math.sqrt(2 * lam), rel=0.05)
    assert C.min_grad > C.threshold
    _, reg0 = level_shift(zeta_xi(), 0, UNIT)
    assert not reg0
    assert level_shift(implicitize(nodal_cubic()), 1e-3, Ball(2.5))[1]


def test_proximity_examples():
    P = zeta_xi()
    C0 = sample_level(P, 0, UNIT)
    assert proximity_check(C0, C0, UNIT) == 0.0
    d = {lam: proximity_check(level_shift(P, lam, UNIT)[0], C0, UNIT) for lam in (0.01, 0.005)}
    assert d[0.01] == pytest.approx(0.1, rel=0.1)
    assert d[0.01] / d[0.005] == pytest.approx(math.sqrt(2), rel=0.02)
    with pytest.raises(ValueError):
        proximity_check(C0, C0 + 10, UNIT)


def test_proximity_monotone():
    P = zeta_xi()
    C0 = sample_level(P, 0, UNIT)
    d = [proximity_check(level_shift(P, lam, UNIT)[0], C0, UNIT) for lam in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(b < a for a, b in zip(d, d[1:])) and d[-1] < 0.02


def test_correspondence_away_from_node():
    P = zeta_xi()
    C0 = sample_level(P, 0, UNIT)
    C, _ = level_shift(P, 1e-4, UNIT)
    omega = Ball(0.3, np.array([0.6, 0, 0, 0]))
    rep = correspondence_check(C, C0, P, omega)
    assert rep["injective"] and rep["max_dist"] < 0.02 and rep["max_tangent_angle"] < 0.05


def test_sweep_and_exports(tmp_path):
    sw = lambda_sweep(zeta_xi(), UNIT, 0.1, count=6)
    # proximity is sqrt(lam): the first dyadic step with sqrt(0.1 / 2^k) <= 0.1 is k = 4
    assert sw["chosen"] == pytest.approx(0.1 / 16)
    rows = json.loads(sweep_json(sw))["rows"]
    assert set(rows[0]) == {"lambda", "regular", "min_grad", "hausdorff"}
    write_critical_csv(critical_points(zeta_xi(), UNIT), tmp_path / "cp.csv")
    rows = list(csv.reader(open(tmp_path / "cp.csv")))
    assert len(rows) == 2 and float(rows[1][4]) == pytest.approx(-1.0)
