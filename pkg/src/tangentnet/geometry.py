"""Linear algebra of C^2 viewed as R^4.

A point is a complex array of trailing shape (2,). The real picture
(re1, im1, re2, im2) is available through to_real / from_real.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALG_TOL = 1e-12
CMP_TOL = 1e-9


def as_point(p) -> np.ndarray:
    """Coerce to a complex array with trailing axis 2; reject non-finite input."""
    a = np.asarray(p, dtype=complex)
    if a.shape[-1:] != (2,):
        raise ValueError(f"expected trailing dimension 2, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite coordinates")
    return a


def to_real(p) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    return np.stack([p[..., 0].real, p[..., 0].imag, p[..., 1].real, p[..., 1].imag], axis=-1)


def from_real(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (4,):
        raise ValueError(f"expected trailing dimension 4, got shape {x.shape}")
    return np.stack([x[..., 0] + 1j * x[..., 1], x[..., 2] + 1j * x[..., 3]], axis=-1)


def hermitian(p, q):
    """<<p, q>> = sum p_i conj(q_i), broadcast over leading axes."""
    return np.sum(np.asarray(p, dtype=complex) * np.conj(np.asarray(q, dtype=complex)), axis=-1)


def dot(p, q):
    """Euclidean inner product on R^4, equal to Re <<p, q>>."""
    return np.real(hermitian(p, q))


def norm(p):
    p = np.asarray(p, dtype=complex)
    return np.sqrt(np.sum(p.real**2 + p.imag**2, axis=-1))


def jmap(p):
    """Complex structure J: multiplication by i."""
    return 1j * np.asarray(p, dtype=complex)


def normalize(p):
    n = norm(p)
    if np.any(n == 0):
        raise ValueError("degenerate direction")
    return np.asarray(p, dtype=complex) / np.asarray(n)[..., None]


@dataclass(frozen=True)
class ComplexFrame:
    """Unitary pair (u, w): w is the normal direction, u spans its complex complement."""

    u: np.ndarray
    w: np.ndarray

    def check(self, tol: float = ALG_TOL) -> bool:
        return (
            abs(hermitian(self.u, self.u) - 1) < tol
            and abs(hermitian(self.w, self.w) - 1) < tol
            and abs(hermitian(self.u, self.w)) < tol
        )

    def split(self, p):
        """Coordinates (<<p,u>>, <<p,w>>) so that p = a u + b w."""
        return hermitian(p, self.u), hermitian(p, self.w)


def complex_orthogonal(p) -> ComplexFrame:
    """Frame with w = p/|p| and u a unit vector of the complex complement of w.

    u comes from the standard basis vector farthest from span_C(w), made
    orthogonal to w; for p = (1, 0) that is e_2 and u = (0, 1).
    """
    p = as_point(p)
    if p.shape != (2,):
        raise ValueError("complex_orthogonal takes a single point")
    n = norm(p)
    if not n > 0:
        raise ValueError("degenerate direction")
    w = p / n
    k = int(np.argmin(np.abs(w)))
    e = np.zeros(2, dtype=complex)
    e[k] = 1.0
    u = e - hermitian(e, w) * w
    u = u / norm(u)
    # one more pass removes the residual component at roundoff level
    u = u - hermitian(u, w) * w
    u = u / norm(u)
    return ComplexFrame(u=u, w=w)


def segment(p, q, n: int) -> np.ndarray:
    """n equally spaced points on the real segment [p, q]."""
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (1 - t) * as_point(p) + t * as_point(q)


def dist(p, q):
    return norm(np.asarray(p, dtype=complex) - np.asarray(q, dtype=complex))


def random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    """n uniform points on S^3."""
    x = rng.standard_normal((n, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return from_real(x)
