import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangentnet.convex import Ball, Ellipsoid, dee, sphere_lattice
from tangentnet.geometry import from_real, hermitian, to_real
from tangentnet.net import (BoundaryArcSet, TangentNet, analytic_lower_bound, build_net, common_tangent_direction,
                            covers, eps_m, f_profile, generic_position, min_path_length, net_distance,
                            net_condition)

E4 = np.array([1.2, 1.0, 1.0, 1.1])


def great_circle(n=400, plane=(0, 1)):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    x = np.zeros((n, 4))
    x[:, plane[0]], x[:, plane[1]] = np.cos(t), np.sin(t)
    return x


def circle_arcs(D, n=400):
    return BoundaryArcSet.from_directions(D, [great_circle(n)], [True])


@pytest.fixture(scope="module")
def balls_net():
    D, Dp = Ball(1.0), Ball(2.0)
    return D, Dp, build_net(circle_arcs(D), D, Dp, 0.1)


def test_net_distance_examples(balls_net):
    D, _, net = balls_net
    p, nu = net.skeleton[3], net.normals[3]
    one = TangentNet(D, p[None], net.radius)
    assert net_distance(one, p + net.radius / 2 * nu) == pytest.approx(net.radius / 2, abs=1e-15)
    assert net.contains(p + net.radius / 2 * nu)
    assert net_distance(net, np.zeros(2, complex)) == pytest.approx(1.0)
    # points of the shrunken body never meet the net
    inner = sphere_lattice(10000) * (1 - 0.1) * np.random.default_rng(0).uniform(0, 1, 10000)[:, None] ** 0.25
    assert not np.any(net.contains(from_real(inner)))
    with pytest.raises(ValueError):
        net_distance(TangentNet(D, np.zeros((0, 2)), 0.1), np.zeros(2))


def test_net_distance_zero_on_hyperplanes(balls_net):
    _, _, net = balls_net
    rng = np.random.default_rng(1)
    for k in rng.integers(0, len(net), 20):
        v = rng.standard_normal(4)
        n = to_real(net.normals[k])
        v -= (v @ n) * n
        q = net.skeleton[k] + from_real(v)
        assert net_distance(net, q) == pytest.approx(0.0, abs=1e-12)
        assert net_distance(net, q + 1e-3 * net.normals[k]) > 0


def test_build_net_balls(balls_net):
    D, Dp, net = balls_net
    A = circle_arcs(D)
    assert A.bigL == pytest.approx(1 + 2 * math.pi, abs=1e-3)
    # oracle: direct scan with the closed-form eps_m = 1 - cos(L/m) for the unit ball
    L = A.bigL
    cond = lambda m: 4 * (m + 1) * (1 - math.cos(L / m)) / math.sqrt(3)
    m = next(m for m in range(3, 10**5) if max(1 - math.cos(L / m), cond(m)) < 0.1)
    assert net.m == m == 614
    assert net.radius == pytest.approx(1 - math.cos(L / m))
    assert net.radius < 0.1 and len(net) == net.m * A.mu
    assert net_condition(net.m, 1, L, 1.0, 1.0) < 0.1 <= net_condition(net.m - 1, 1, L, 1.0, 1.0)


def test_build_net_large_eps_and_errors():
    D, Dp = Ball(1.0), Ball(2.0)
    A = circle_arcs(D)
    big = build_net(A, D, Dp, 1.0)
    assert big.m < 614 and big.radius < 1.0
    with pytest.raises(ValueError):
        build_net(BoundaryArcSet([]), D, Dp, 0.1)
    with pytest.raises(ValueError):
        build_net(A, D, Dp, 0.0)
    off = BoundaryArcSet([from_real(1.1 * great_circle())], [True])
    with pytest.raises(ValueError):
        build_net(off, D, Dp, 0.1)


def test_covers(balls_net):
    D, _, net = balls_net
    A = circle_arcs(D, 4000)
    assert covers(net, A)
    half = net.with_skeleton(net.skeleton[: len(net) // 2])
    half.m = net.m
    assert not covers(half, A)
    assert covers(net, BoundaryArcSet([]))
    with pytest.raises(ValueError):
        covers(net, A, check_body=Ball(2.0))


def test_generic_position():
    D = Ball(1.0)
    anti = TangentNet(D, np.array([[1, 0], [-1, 0]], complex), 0.1)
    moved = generic_position(anti)
    n = moved.normals
    assert abs(n[0, 0] * n[1, 1] - n[0, 1] * n[1, 0]) > 1e-6
    assert np.allclose(D.gauge(moved.skeleton), 1)
    ok = TangentNet(D, np.array([[1, 0], [0, 1]], complex), 0.1)
    assert generic_position(ok) is ok
    rnd = TangentNet(D, from_real(sphere_lattice(20)), 0.1)
    assert generic_position(rnd) is rnd


def test_common_tangent_direction_axes():
    D = Ball(1.0)
    v = common_tangent_direction(D, np.array([1, 0], complex), np.array([0, 1], complex))
    assert np.allclose(v, np.array([1j, 1j]) / math.sqrt(2), atol=1e-9)
    # brute-force sweep over the real 2-plane spanned by (i,0) and (0,i)
    a = np.linspace(0, np.pi, 20001)
    best = np.max(np.minimum(np.abs(np.cos(a)), np.abs(np.sin(a))))
    assert min(abs(v[0]), abs(v[1])) == pytest.approx(best, abs=1e-6)
    same = common_tangent_direction(D, np.array([1, 0], complex), np.array([1, 0], complex))
    assert abs(hermitian(same, np.array([1, 0]))) > 0.99
    with pytest.raises(ValueError):
        common_tangent_direction(D, np.array([1, 0], complex), np.array([1j, 0], complex))


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_common_tangent_direction_random(seed):
    D = Ellipsoid(E4) if seed % 2 else Ball(1.0)
    rng = np.random.default_rng(seed)
    p1, p2 = (from_real(D.chart(rng.standard_normal((1, 4))))[0] for _ in range(2))
    v = common_tangent_direction(D, p1, p2)
    for p in (p1, p2):
        nu = D.outward_normal(p)
        assert abs(hermitian(v, nu).real) < 1e-12
        assert abs(hermitian(v, nu)) > 1e-6
    assert np.linalg.norm(to_real(v)) == pytest.approx(1.0)


def test_single_slab_oracle():
    for eps in (1e-2, 1e-4):
        net = TangentNet(Ball(1.0), np.array([[1, 0]], complex), eps)
        # one slab and no seams: the shortest route is the chord inside the tangent hyperplane
        assert min_path_length(net, Ball(1.0), Ball(2.0)).min_length == pytest.approx(math.sqrt(3))
    empty = min_path_length(TangentNet(Ball(1.0), np.zeros((0, 2)), 0.1), Ball(1.0), Ball(2.0))
    assert not empty.reachable and empty.min_length == math.inf


def test_built_net_balls(balls_net):
    D, Dp, net = balls_net
    bound = analytic_lower_bound(net, D, Dp)
    assert bound >= 2 / math.sqrt(3) - 0.1
    r = min_path_length(net, D, Dp, resolution=0.3)
    assert r.reachable
    assert r.min_length >= 2 / math.sqrt(3) - 0.1 - r.slack
    assert r.min_length + r.slack >= bound


def test_bound_limits_and_profile():
    D, Dp = Ball(1.0), Ball(2.0)
    net = TangentNet(D, np.array([[1, 0]], complex), 1e-12, m=10, mu=1)
    assert analytic_lower_bound(net, D, Dp) == pytest.approx(dee(D, Dp).dee, abs=1e-9)
    with pytest.raises(ValueError):
        analytic_lower_bound(TangentNet(D, np.array([[1, 0]], complex), 0.1), D, Dp)
    assert f_profile(2.0, 1.0) == pytest.approx(2 / math.sqrt(3))
    assert f_profile(2.0, 1.0) == pytest.approx(dee(D, Dp).dee)
    t = np.linspace(1.01, 10, 500)
    assert np.all(np.diff(f_profile(t, 1.0)) > 0)


@given(st.floats(0.5, 20), st.floats(0.1, 3), st.integers(1, 10**4))
def test_eps_m_decreases(L, kappa, m):
    m = max(m, math.ceil(L * kappa / math.pi))
    assert 0 <= eps_m(L, kappa, m + 1) <= eps_m(L, kappa, m)


def _pair(seed):
    rng = np.random.default_rng(seed)
    if seed < 16:
        r = rng.uniform(0.5, 2.0)
        c = rng.uniform(-0.3, 0.3, 4)
        return Ball(r), Ball(r * rng.uniform(1.5, 3.0), c * r), rng.uniform(0.1, 1.0)
    a = E4 * rng.uniform(0.8, 1.2)
    return Ellipsoid(a), Ball(3.0 * float(a.max())), 1.0


@pytest.mark.parametrize("seed", range(20))
def test_oracle_respects_bound(seed):
    D, Dp, eps = _pair(seed)
    rng = np.random.default_rng(100 + seed)
    plane = tuple(rng.choice(4, 2, replace=False))
    A = BoundaryArcSet.from_directions(D, [great_circle(400, plane)], [True])
    net = build_net(A, D, Dp, eps)
    assert net.radius < eps and len(net) == net.m
    assert covers(net, A)
    r = min_path_length(net, D, Dp, resolution=0.3)
    assert r.reachable and r.min_length + r.slack >= analytic_lower_bound(net, D, Dp)
