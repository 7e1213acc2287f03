import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tangentnet.geometry import (ALG_TOL, as_point, complex_orthogonal, dot, from_real, hermitian, jmap, norm,
                                 random_unit, to_real)

finite = st.floats(-1e3, 1e3, allow_nan=False)
points = st.tuples(finite, finite, finite, finite).map(lambda t: np.array([t[0] + 1j * t[1], t[2] + 1j * t[3]]))


@pytest.mark.parametrize("p, q, expected", [
    ((1, 0), (0, 1), 0),
    ((1j, 0), (1, 0), 1j),
    ((1, 2), (3, 4j), 3 - 8j),
])
def test_hermitian_values(p, q, expected):
    assert hermitian(np.array(p), np.array(q)) == pytest.approx(expected)


def test_jmap_basis():
    assert np.allclose(jmap(np.array([1, 0])), [1j, 0])


@given(points, points)
def test_hermitian_conjugate_symmetry(p, q):
    assert hermitian(p, q) == pytest.approx(np.conj(hermitian(q, p)), abs=1e-9)


@given(points, points)
def test_real_part_is_r4_dot(p, q):
    scale = max(1.0, norm(p) * norm(q))
    assert abs(dot(p, q) - to_real(p) @ to_real(q)) <= ALG_TOL * scale


@given(points)
def test_j_squared_and_skew(p):
    assert np.allclose(jmap(jmap(p)), -p)
    assert abs(np.real(hermitian(jmap(p), p))) <= ALG_TOL * max(1.0, norm(p) ** 2)


@given(points)
def test_real_round_trip(p):
    assert np.array_equal(from_real(to_real(p)), p)


@given(points)
def test_frame_invariants(p):
    if norm(p) < 1e-6:
        return
    f = complex_orthogonal(p)
    assert f.check()
    a, b = f.split(p)
    assert np.allclose(a * f.u + b * f.w, p, atol=1e-9 * max(1, norm(p)))


def test_frame_axes():
    f = complex_orthogonal(np.array([1, 0]))
    assert abs(f.u[0]) < ALG_TOL and abs(abs(f.u[1]) - 1) < ALG_TOL
    f = complex_orthogonal(np.array([0, 1]))
    assert abs(f.u[1]) < ALG_TOL and abs(abs(f.u[0]) - 1) < ALG_TOL


def test_frame_random_orthogonality():
    P = random_unit(np.random.default_rng(1), 1000)
    worst = max(abs(hermitian(f.u, f.w)) for f in map(complex_orthogonal, P))
    assert worst < 1e-12


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        complex_orthogonal(np.zeros(2))
    with pytest.raises(ValueError):
        as_point([1, 2, 3])
    with pytest.raises(ValueError):
        as_point([np.nan, 0])
