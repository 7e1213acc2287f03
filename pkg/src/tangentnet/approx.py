"""Polynomial approximation on disjoint planar compacta.

Fits are least-squares problems in a basis orthogonalized against the
sample points themselves (Arnoldi on the multiplication-by-z operator),
which keeps degrees of several hundred well conditioned. Errors are
measured, never assumed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .curve import AnalyticMap, Domain

COND_LIMIT = 1e12


# --- orthogonal basis ------------------------------------------------------------------


def arnoldi(z: np.ndarray, degree: int, weights: np.ndarray | None = None) -> np.ndarray:
    """Hessenberg matrix H (degree+1, degree) of the Krylov basis 1, z, z^2, ... on samples z.

    Columns are orthonormal for the weighted discrete inner product; two
    Gram-Schmidt passes per column.
    """
    z = np.asarray(z, dtype=complex).ravel()
    m = len(z)
    w = np.ones(m) / m if weights is None else np.asarray(weights, float) / np.sum(weights)
    Q = np.zeros((m, degree + 1), complex)
    H = np.zeros((degree + 1, degree), complex)
    Q[:, 0] = 1.0
    for k in range(degree):
        q = z * Q[:, k]
        for _ in range(2):
            h = (Q[:, : k + 1].conj().T * w) @ q
            q = q - Q[:, : k + 1] @ h
            H[: k + 1, k] += h
        H[k + 1, k] = math.sqrt(float(np.sum(w * np.abs(q) ** 2)))
        if H[k + 1, k] == 0:
            raise ValueError("sample set too small for the requested degree")
        Q[:, k + 1] = q / H[k + 1, k]
    return H


def arnoldi_eval(H: np.ndarray, z: np.ndarray, deriv: bool = False):
    """Basis values (and z-derivatives) at new points by replaying the recurrence."""
    z = np.asarray(z, dtype=complex).ravel()
    n = H.shape[1]
    Q = np.zeros((len(z), n + 1), complex)
    Q[:, 0] = 1.0
    D = np.zeros_like(Q) if deriv else None
    for k in range(n):
        q = z * Q[:, k] - Q[:, : k + 1] @ H[: k + 1, k]
        Q[:, k + 1] = q / H[k + 1, k]
        if deriv:
            d = Q[:, k] + z * D[:, k] - D[:, : k + 1] @ H[: k + 1, k]
            D[:, k + 1] = d / H[k + 1, k]
    return (Q, D) if deriv else Q


@dataclass
class ArnoldiPoly:
    """Polynomial (possibly vector valued) in an Arnoldi basis."""

    H: np.ndarray
    coef: np.ndarray

    @property
    def degree(self) -> int:
        return self.H.shape[1]

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (arnoldi_eval(self.H, z) @ self.coef).reshape(z.shape + self.coef.shape[1:])

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        return (arnoldi_eval(self.H, z, True)[1] @ self.coef).reshape(z.shape + self.coef.shape[1:])

    def monomial(self, radius: float, n: int | None = None) -> np.ndarray:
        return monomial_coefficients(self, radius, self.degree + 1 if n is None else n)


def monomial_coefficients(f: Callable, radius: float, n: int, nfft: int | None = None) -> np.ndarray:
    """First n Taylor coefficients of a polynomial f from samples on |z| = radius (FFT)."""
    nfft = max(4096, 2 * n) if nfft is None else nfft
    if nfft < n:
        raise ValueError("nfft must be at least n")
    z = radius * np.exp(2j * np.pi * np.arange(nfft) / nfft)
    v = np.asarray(f(z))
    c = np.fft.fft(v, axis=0)[:n] / nfft
    k = np.arange(n)
    scale = radius ** (-k.astype(float))
    return c * scale.reshape((-1,) + (1,) * (c.ndim - 1))


# --- compacta and targets -------------------------------------------------------------


@dataclass
class Compact:
    """A compact planar set given by boundary samples; closed polygons when `interior` is set."""

    samples: np.ndarray
    interior: bool = False
    name: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex).ravel()

    def arclength_weights(self) -> np.ndarray:
        z = self.samples
        if len(z) < 2:
            return np.ones(len(z))
        d = np.abs(np.diff(z))
        if self.interior:
            d = np.append(d, abs(z[0] - z[-1]))
            return 0.5 * (d + np.roll(d, 1))
        w = np.zeros(len(z))
        w[:-1] += 0.5 * d
        w[1:] += 0.5 * d
        return w

    def encloses(self, pts) -> np.ndarray:
        """Winding-number test against the closed boundary polygon."""
        pts = np.asarray(pts, dtype=complex).ravel()
        if not self.interior:
            return np.zeros(len(pts), bool)
        a = self.samples[None, :] - pts[:, None]
        b = np.roll(a, -1, axis=1)
        wind = np.angle(b / a).sum(axis=1) / (2 * np.pi)
        return np.abs(wind) > 0.5


@dataclass
class CompactaSet:
    compacta: list
    connected_complement: bool = False

    def __post_init__(self):
        for i, K in enumerate(self.compacta):
            if len(K.samples) < 16 and len(K.samples) > 0:
                raise ValueError(f"compact {i} has fewer than 16 samples")
        self.check_disjoint()

    def check_disjoint(self):
        from scipy.spatial import cKDTree

        live = [K for K in self.compacta if len(K.samples)]
        for i in range(len(live)):
            for j in range(i + 1, len(live)):
                A, B = live[i], live[j]
                ta = cKDTree(np.stack([A.samples.real, A.samples.imag], 1))
                d, _ = ta.query(np.stack([B.samples.real, B.samples.imag], 1))
                if d.min() <= 0 or np.any(A.encloses(B.samples)) or np.any(B.encloses(A.samples)):
                    raise ValueError(f"compacta {i} and {j} overlap")


@dataclass
class Piece:
    """Target on one compact: value(z) (or a constant), optional derivative, and the norm to control."""

    value: Callable | complex
    deriv: Callable | None = None
    norm: str = "C1"
    deriv_weight: float = 1.0

    def values(self, z):
        if callable(self.value):
            return np.asarray(self.value(z), dtype=complex)
        return np.full(np.shape(z), complex(self.value))

    def derivs(self, z):
        if self.deriv is not None:
            return np.asarray(self.deriv(z), dtype=complex)
        if callable(self.value):
            raise ValueError("C1 target needs a derivative")
        return np.zeros(np.shape(z), complex)


@dataclass
class FitReport:
    per_set: dict
    degree: int
    condition_estimate: float

    def to_json(self) -> str:
        return json.dumps({"per_set": self.per_set, "degree": self.degree,
                           "condition_estimate": self.condition_estimate}, sort_keys=True)

    def worst(self, key: str = "c0") -> float:
        return max((v.get(key) or 0.0) for v in self.per_set.values())


def runge_fit(spec: CompactaSet, target: Sequence[Piece], degree: int, check_samples: int | None = None):
    """Least-squares polynomial fit of a piecewise target on disjoint compacta.

    C1 pieces contribute value and derivative residuals; sample weights
    follow local arclength. Returns (ArnoldiPoly, FitReport) with the sup
    errors measured on the samples.
    """
    if not spec.connected_complement:
        raise ValueError("caller must certify a connected complement (Runge position)")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if len(target) != len(spec.compacta):
        raise ValueError("one target piece per compact")
    pairs = [(K, P) for K, P in zip(spec.compacta, target) if len(K.samples)]
    if not pairs:
        raise ValueError("no samples")
    z = np.concatenate([K.samples for K, _ in pairs])
    wts = np.concatenate([K.arclength_weights() for K, _ in pairs])
    wts = np.maximum(wts, 1e-3 * wts.max())
    H = arnoldi(z, degree, wts) if degree > 0 else np.zeros((1, 0), complex)
    Qb, Db = arnoldi_eval(H, z, True)
    sw = np.sqrt(wts / wts.sum())
    rows, rhs = [], []
    start = 0
    for K, P in pairs:
        n = len(K.samples)
        sl = slice(start, start + n)
        rows.append(Qb[sl] * sw[sl, None])
        rhs.append(P.values(K.samples) * sw[sl])
        if P.norm.upper() == "C1":
            rows.append(Db[sl] * (P.deriv_weight * sw[sl])[:, None])
            rhs.append(P.derivs(K.samples) * P.deriv_weight * sw[sl])
        start += n
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    coef, _, rank, s = np.linalg.lstsq(A, b, rcond=None)
    cond = float(s[0] / s[-1]) if len(s) and s[-1] > 0 else math.inf
    if cond > COND_LIMIT:
        raise ValueError(f"ill-conditioned fit (condition estimate {cond:.3g})")
    poly = ArnoldiPoly(H, coef)
    per = {}
    for idx, (K, P) in enumerate(pairs):
        name = K.name or f"set{idx}"
        e0 = float(np.abs(poly(K.samples) - P.values(K.samples)).max())
        e1 = None
        if P.norm.upper() == "C1":
            e1 = float(np.abs(poly.deriv(K.samples) - P.derivs(K.samples)).max())
        per[name] = {"c0": e0, "c1": e1}
    return poly, FitReport(per, degree, cond)


# --- Mergelyan-type extension ---------------------------------------------------------


@dataclass
class RadialArc:
    """Radial parameter segment {r e^{i angle} : r0 <= r <= r1} with target values in C^2."""

    angle: float
    r0: float
    r1: float
    target: Callable  # r -> (n, 2) complex

    def params(self, n: int = 200) -> np.ndarray:
        return np.linspace(self.r0, self.r1, n) * np.exp(1j * self.angle)


@dataclass
class ExtensionReport:
    c1_inner: float
    arc_c0: list
    budget: float
    degree: int
    condition_estimate: float
    exceeded: bool = field(init=False)

    def __post_init__(self):
        self.exceeded = not (self.c1_inner < self.budget)

    def to_dict(self):
        return {"c1_inner": self.c1_inner, "arc_c0": self.arc_c0, "budget": self.budget,
                "degree": self.degree, "condition_estimate": self.condition_estimate, "exceeded": self.exceeded}


def mergelyan_extend(X: AnalyticMap, arcs: Sequence[RadialArc], outer: float, budget: float, degree: int,
                     seed: Callable | None = None, seed_deriv: Callable | None = None,
                     n_circle: int = 1024, n_arc: int = 200, arc_weight: float = 1.0):
    """Polynomial map on |z| <= outer close to X in C^1 on the inner disc and to arc targets in C^0.

    An optional explicit seed (a polynomial map carrying the arcs roughly)
    is corrected by one least-squares fit of the residuals; without a seed
    the fit starts from X itself. Exceedance is reported, not raised.
    """
    rho = X.domain.outer
    if not outer > rho:
        raise ValueError("outer radius must exceed the inner disc")
    for a in arcs:
        if a.r1 > outer * (1 + 1e-12) or a.r0 < rho * (1 - 1e-9):
            raise ValueError("arc leaves the annulus between the discs")
    angs = np.array([a.angle % (2 * np.pi) for a in arcs])
    for i in range(len(arcs)):
        for j in range(i + 1, len(arcs)):
            d = abs((angs[i] - angs[j] + np.pi) % (2 * np.pi) - np.pi)
            if d < 1e-9:
                raise ValueError("arcs overlap")
    if seed is None:
        seed, seed_deriv = X, X.deriv
    zc = rho * np.exp(2j * np.pi * np.arange(n_circle) / n_circle)
    arc_pts = [a.params(n_arc)[1:] for a in arcs]  # the root of each arc lies on the circle
    comps = [Compact(zc, True, "inner")] + [Compact(zp, False) for zp in arc_pts]
    # residual targets for the correction: C1 on the inner circle, C0 along the arcs
    vals = np.vstack([X(zc) - seed(zc)] + [np.asarray(a.target(np.abs(zp))) - seed(zp)
                                            for a, zp in zip(arcs, arc_pts)])
    dvals = X.deriv(zc) - seed_deriv(zc)
    # arcs touch the circle at their roots, so everything is fitted as one sample set
    z_all = np.concatenate([c.samples for c in comps])
    fits = [_joint_fit(z_all, len(zc), vals[:, k], dvals[:, k], degree, comps, arc_weight) for k in range(2)]
    H = fits[0][0]
    coef = np.stack([fits[0][1], fits[1][1]], axis=1)
    corr = ArnoldiPoly(H, coef)
    n_coef = degree + 1

    def total(z):
        return seed(z) + corr(z)

    C = monomial_coefficients(total, outer, max(n_coef, _seed_len(seed)))
    Y = AnalyticMap(C, Domain(outer))
    c1 = max(float(np.max(np.linalg.norm(Y(zc) - X(zc), axis=-1))),
             float(np.max(np.linalg.norm(Y.deriv(zc) - X.deriv(zc), axis=-1))))
    arc_err = [float(np.max(np.linalg.norm(Y(zp) - np.asarray(a.target(np.abs(zp))), axis=-1)))
               for a, zp in zip(arcs, arc_pts)]
    return Y, ExtensionReport(c1, arc_err, budget, n_coef - 1, max(fits[0][2], fits[1][2]))


def _seed_len(seed) -> int:
    if isinstance(seed, AnalyticMap):
        return len(seed.coeffs)
    return int(getattr(seed, "ncoef", 0))


def _joint_fit(z, n_circle, vals, dvals, degree, comps, arc_weight):
    w = np.concatenate([c.arclength_weights() for c in comps])
    w[n_circle:] *= arc_weight
    w = np.maximum(w, 1e-3 * w.max())
    H = arnoldi(z, degree, w)
    Qb, Db = arnoldi_eval(H, z, True)
    sw = np.sqrt(w / w.sum())
    A = np.vstack([Qb * sw[:, None], Db[:n_circle] * sw[:n_circle, None]])
    b = np.concatenate([vals * sw, dvals * sw[:n_circle]])
    coef, _, _, s = np.linalg.lstsq(A, b, rcond=None)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
    if cond > COND_LIMIT:
        raise ValueError(f"ill-conditioned fit (condition estimate {cond:.3g})")
    return H, coef, cond
