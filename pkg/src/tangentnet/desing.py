"""Implicit equations of polynomial curves and their level-set smoothing.

A polynomial parametrized curve z -> (X1(z), X2(z)) is the zero set of
P0 = Res_z(X1 - zeta, X2 - xi). Its singular points are the common zeros
of P0 and its gradient; shifting to P0 = lambda for a small regular value
lambda gives a smooth curve close to the original one away from them.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.spatial import cKDTree

from .convex import ConvexBody, hausdorff
from .curve import AnalyticMap
from .geometry import hermitian, norm

DEGREE_CAP = 12
VANISH_TOL = 1e-8


@dataclass
class BivariatePolynomial:
    """sum c[i, j] zeta^i xi^j."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 2:
            raise ValueError("coefficient matrix must be 2-d")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficients")
        if not np.any(c != 0):
            raise ValueError("zero polynomial")
        self.coeffs = c

    @property
    def degrees(self) -> tuple[int, int]:
        nz = np.nonzero(self.coeffs)
        return int(nz[0].max()), int(nz[1].max())

    @property
    def total_degree(self) -> int:
        nz = np.nonzero(self.coeffs)
        return int((nz[0] + nz[1]).max())

    def __call__(self, q):
        q = np.asarray(q, dtype=complex)
        return npoly.polyval2d(q[..., 0], q[..., 1], self.coeffs)

    def __sub__(self, lam) -> "BivariatePolynomial":
        c = self.coeffs.copy()
        c[0, 0] -= lam
        return BivariatePolynomial(c)

    def _d(self, axis: int) -> np.ndarray:
        return npoly.polyder(self.coeffs, axis=axis) if self.coeffs.shape[axis] > 1 else \
            np.zeros((1, 1), complex)

    def grad(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=complex)
        z, x = q[..., 0], q[..., 1]
        return np.stack([npoly.polyval2d(z, x, self._d(0)), npoly.polyval2d(z, x, self._d(1))], -1)

    def hessian(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=complex)
        z, x = q[..., 0], q[..., 1]
        cz, cx = self._d(0), self._d(1)

        def der(c, axis):
            return npoly.polyder(c, axis=axis) if c.shape[axis] > 1 else np.zeros((1, 1), complex)

        hzz = npoly.polyval2d(z, x, der(cz, 0))
        hzx = npoly.polyval2d(z, x, der(cz, 1))
        hxx = npoly.polyval2d(z, x, der(cx, 1))
        return np.stack([np.stack([hzz, hzx], -1), np.stack([hzx, hxx], -1)], -2)

    def scale(self, q) -> np.ndarray:
        """sum |c_ij| |zeta|^i |xi|^j, the natural size of P(q) for relative tests."""
        q = np.abs(np.asarray(q, dtype=complex))
        return npoly.polyval2d(q[..., 0], q[..., 1], np.abs(self.coeffs))

    def normalized(self) -> "BivariatePolynomial":
        """Divide by the leading coefficient: highest total degree, then highest zeta power."""
        c = self.coeffs.copy()
        c[np.abs(c) < 1e-12 * np.abs(c).max()] = 0
        i, j = np.nonzero(c)
        k = max(range(len(i)), key=lambda t: (i[t] + j[t], i[t]))
        c = c / c[i[k], j[k]]
        c[np.abs(c) < 1e-12 * np.abs(c).max()] = 0
        return BivariatePolynomial(_trim(c))

    def to_dict(self):
        i, j = np.nonzero(self.coeffs)
        return {"terms": [[int(a), int(b), self.coeffs[a, b].real, self.coeffs[a, b].imag] for a, b in zip(i, j)]}


def _trim(c: np.ndarray) -> np.ndarray:
    i, j = np.nonzero(c)
    return c[: i.max() + 1, : j.max() + 1]


# --- implicitization ----------------------------------------------------------------------------


def _poly_coeffs(X: AnalyticMap, k: int) -> np.ndarray:
    if X.low != 0:
        raise ValueError("components must be polynomials in z")
    c = X.coeffs[:, k]
    nz = np.nonzero(np.abs(c) > 1e-14 * max(1.0, np.abs(c).max()))[0]
    return c[: nz[-1] + 1] if len(nz) else np.zeros(1, complex)


def sylvester(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Sylvester matrix of f, g given by ascending coefficients; batched over leading axes of f and g."""
    f, g = np.asarray(f, complex), np.asarray(g, complex)
    m, n = f.shape[-1] - 1, g.shape[-1] - 1
    size = m + n
    lead = np.broadcast_shapes(f.shape[:-1], g.shape[:-1])
    S = np.zeros(lead + (size, size), complex)
    fd, gd = f[..., ::-1], g[..., ::-1]
    for r in range(n):
        S[..., r, r : r + m + 1] = fd
    for r in range(m):
        S[..., n + r, r : r + n + 1] = gd
    return S


def implicitize(X: AnalyticMap, samples: int = 1000) -> BivariatePolynomial:
    """P0(zeta, xi) = Res_z(X1(z) - zeta, X2(z) - xi), normalized; vanishes on the image of X."""
    a = _poly_coeffs(X, 0)
    b = _poly_coeffs(X, 1)
    m, n = len(a) - 1, len(b) - 1
    if max(m, n) > DEGREE_CAP:
        raise ValueError(f"component degree above the cap {DEGREE_CAP}")
    if m + n == 0:
        raise ValueError("degenerate resultant: constant map")
    zb = X.domain.outer * np.exp(2j * np.pi * np.arange(256) / 256)
    Yb = X(zb)
    rz = max(1.0, float(np.abs(Yb[:, 0]).max()))
    rx = max(1.0, float(np.abs(Yb[:, 1]).max()))
    # degree in zeta is at most n and in xi at most m: interpolate on scaled roots of unity
    nz, nx = n + 1, m + 1
    Z = rz * np.exp(2j * np.pi * np.arange(nz) / nz)
    Xi = rx * np.exp(2j * np.pi * np.arange(nx) / nx)
    ZZ, XX = np.meshgrid(Z, Xi, indexing="ij")
    f = np.broadcast_to(a, ZZ.shape + (m + 1,)).copy()
    f[..., 0] -= ZZ
    g = np.broadcast_to(b, XX.shape + (n + 1,)).copy()
    g[..., 0] -= XX
    # coefficient scaling: each row block is divided by its largest entry, undone afterwards
    sf = np.abs(a).max() if m > 0 else 1.0
    sg = np.abs(b).max() if n > 0 else 1.0
    R = np.linalg.det(sylvester(f / sf, g / sg)) if m + n > 0 else np.ones(ZZ.shape, complex)
    R = R * sf**n * sg**m
    C = np.fft.fft2(R) / (nz * nx)
    C = C / np.outer(rz ** np.arange(nz), rx ** np.arange(nx))
    if not np.any(np.abs(C) > 1e-13 * max(1.0, np.abs(R).max())):
        raise ValueError("degenerate resultant: identically zero (non-generic parametrization)")
    P = BivariatePolynomial(C).normalized()
    zs = X.domain.polar_grid(25, 40).ravel()[:samples]
    q = X(zs)
    rel = np.abs(P(q)) / np.maximum(P.scale(q), 1e-300)
    if rel.max() > VANISH_TOL:
        raise ValueError(f"implicit equation does not vanish on the image (relative {rel.max():.3g})")
    return P


# --- singular points ------------------------------------------------------------------------------


@dataclass
class CriticalPoint:
    point: np.ndarray
    hessian: np.ndarray
    det: complex
    residual: float
    converged: bool = True

    def to_dict(self):
        return {"point": [[z.real, z.imag] for z in self.point], "det": [self.det.real, self.det.imag],
                "residual": self.residual, "converged": self.converged}


def _region_seeds(region: ConvexBody, n: int) -> np.ndarray:
    lo = -region.support(-np.eye(4))
    hi = region.support(np.eye(4))
    axes = [np.linspace(lo[k], hi[k], n) for k in range(4)]
    G = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 4)
    G = G[region.gauge(G) <= 1]
    return G[:, 0::2] + 1j * G[:, 1::2]


def critical_points(P: BivariatePolynomial, region: ConvexBody, n: int = 9, iters: int = 50,
                    tol: float = 1e-10) -> list[CriticalPoint]:
    """Common zeros of P, P_zeta, P_xi inside region: Newton on grad P = 0 from grid seeds.

    Seeds that come close without converging are returned with converged=False.
    """
    q = _region_seeds(region, n)
    for _ in range(iters):
        gr = P.grad(q)
        H = P.hessian(q)
        det = H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] ** 2
        ok = np.abs(det) > 1e-300
        step = np.zeros_like(q)
        step[ok, 0] = (H[ok, 1, 1] * gr[ok, 0] - H[ok, 0, 1] * gr[ok, 1]) / det[ok]
        step[ok, 1] = (H[ok, 0, 0] * gr[ok, 1] - H[ok, 0, 1] * gr[ok, 0]) / det[ok]
        q = q - step
        q = np.where(np.isfinite(q), q, 1e6)
    gr = norm(P.grad(q))
    cs = np.maximum(P.scale(q), 1.0)
    val = np.abs(P(q)) / cs
    inside = region.gauge(q) <= 1 + 1e-9
    conv = inside & (gr / cs < tol) & (val < tol)
    stalled = inside & ~conv & (gr / cs < 1e-4) & (val < 1e-4)
    out = []
    for pts, flag in ((q[conv], True), (q[stalled], False)):
        if not len(pts):
            continue
        tree = cKDTree(np.concatenate([pts.real, pts.imag], 1))
        taken = np.zeros(len(pts), bool)
        for k in range(len(pts)):
            if taken[k]:
                continue
            group = tree.query_ball_point(np.concatenate([pts[k].real, pts[k].imag]), 1e-6)
            taken[group] = True
            if not flag and any(np.linalg.norm(c.point - pts[k]) < 1e-3 for c in out):
                continue
            p = pts[k]
            Hk = P.hessian(p)
            res = float(max(abs(P(p)), norm(P.grad(p))))
            out.append(CriticalPoint(p, Hk, complex(Hk[0, 0] * Hk[1, 1] - Hk[0, 1] ** 2), res, flag))
    if any(not c.converged for c in out):
        warnings.warn("Newton did not converge at some seed clusters", RuntimeWarning)
    return out


# --- level sets -------------------------------------------------------------------------------


@dataclass
class LevelCurve:
    lam: complex
    points: np.ndarray
    min_grad: float
    threshold: float
    singular: list

    @property
    def regular(self) -> bool:
        return self.min_grad > self.threshold

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["zeta_re", "zeta_im", "xi_re", "xi_im"])
            for p in self.points:
                w.writerow([repr(float(v)) for v in (p[0].real, p[0].imag, p[1].real, p[1].imag)])


def _slice_roots(c: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Roots s of sum_ij c[i, j] t^i s^j = 0 for every t (companion eigenvalues); returns (t, s) pairs."""
    d = c.shape[1] - 1
    A = npoly.polyval(t, c)  # (d + 1, len(t)): coefficients in s
    A = np.atleast_2d(A)
    if d == 0:
        return np.zeros(0, complex), np.zeros(0, complex)
    lead = A[-1]
    big = np.abs(A).max(axis=0)
    good = np.abs(lead) > 1e-12 * np.maximum(big, 1e-300)
    ts, ss = [], []
    if np.any(good):
        Ag = A[:, good] / lead[good]
        comp = np.zeros((good.sum(), d, d), complex)
        comp[:, 1:, :-1] = np.eye(d - 1) if d > 1 else 0
        comp[:, :, -1] = -Ag[:-1].T
        ev = np.linalg.eigvals(comp)
        ts.append(np.repeat(t[good], d))
        ss.append(ev.ravel())
    for k in np.nonzero(~good)[0]:
        a = A[:, k]
        if not np.any(np.abs(a) > 1e-14 * max(1.0, big[k])):
            continue  # the whole line lies in the curve; other slices cover it
        nzk = np.nonzero(np.abs(a) > 1e-14 * big[k])[0]
        r = np.roots(a[: nzk[-1] + 1][::-1])
        ts.append(np.full(len(r), t[k]))
        ss.append(r)
    if not ts:
        return np.zeros(0, complex), np.zeros(0, complex)
    return np.concatenate(ts), np.concatenate(ss)


def _plane_grid(region: ConvexBody, axis: int, h: float) -> np.ndarray:
    e = np.eye(4)
    lo = -region.support(-e[2 * axis]), -region.support(-e[2 * axis + 1])
    hi = region.support(e[2 * axis]), region.support(e[2 * axis + 1])
    x = np.arange(lo[0], hi[0] + h / 2, h)
    y = np.arange(lo[1], hi[1] + h / 2, h)
    return (x[:, None] + 1j * y[None, :]).ravel()


def sample_level(P: BivariatePolynomial, lam: complex, region: ConvexBody, h: float = 0.01) -> np.ndarray:
    """Points of {P = lam} in region from slicing by both coordinates on a grid of spacing h."""
    Q = P - lam
    pts = []
    t, s = _slice_roots(Q.coeffs, _plane_grid(region, 0, h))
    pts.append(np.stack([t, s], -1))
    t, s = _slice_roots(Q.coeffs.T, _plane_grid(region, 1, h))
    pts.append(np.stack([s, t], -1))
    q = np.concatenate(pts)
    q = q[np.all(np.isfinite(q), axis=1)]
    return q[region.gauge(q) <= 1]


def _continue(P: BivariatePolynomial, q: np.ndarray, lam: complex, steps: int = 8, newton: int = 6):
    """Move zero-set samples to {P = lam}: Newton along conj(grad P) with lam ramped in steps."""
    q = q.copy()
    for s in range(1, steps + 1):
        target = lam * s / steps
        for _ in range(newton):
            g = P.grad(q)
            g2 = np.sum(np.abs(g) ** 2, -1)
            r = P(q) - target
            with np.errstate(divide="ignore", invalid="ignore"):
                q = q - (r / g2)[:, None] * np.conj(g)
    ok = np.all(np.isfinite(q), axis=1)
    ok[ok] &= np.abs(P(q[ok]) - lam) <= 1e-10 * np.maximum(P.scale(q[ok]), 1.0)
    return q[ok]


def level_shift(P: BivariatePolynomial, lam: complex, region: ConvexBody, h: float = 0.01,
                threshold: float | None = None) -> tuple[LevelCurve, bool]:
    """Sampled {P = lam} in region and whether lam is a regular value there.

    Samples come from exact slicing plus continuation of the zero set; exact
    singular points of P - lam inside region are added, so a singular value
    is detected even between samples. regular = min |grad P| > threshold.
    """
    lam = complex(lam)
    q = sample_level(P, lam, region, h)
    if lam != 0:
        z0 = sample_level(P, 0, region, h)
        if len(z0):
            qc = _continue(P, z0[:: max(1, len(z0) // 2000)], lam)
            if not len(qc):
                raise ValueError("continuation lost the curve")
            qc = qc[region.gauge(qc) <= 1]
            q = np.concatenate([q, qc])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sing = [c for c in critical_points(P - lam, region) if c.converged]
    if sing:
        q = np.concatenate([q, np.array([c.point for c in sing])])
    if not len(q):
        raise ValueError("no samples of the level set in the region")
    scale = float(np.abs(P.coeffs).max())
    threshold = 1e-8 * scale if threshold is None else threshold
    mg = float(norm(P.grad(q)).min())
    curve = LevelCurve(lam, q, mg, threshold, sing)
    return curve, curve.regular


def _clip(C, region: ConvexBody) -> np.ndarray:
    pts = C.points if isinstance(C, LevelCurve) else np.asarray(C, complex)
    pts = pts[region.gauge(pts) <= 1]
    if not len(pts):
        raise ValueError("empty clip")
    return pts


def proximity_check(C_lam, C0, region: ConvexBody, symmetric: bool = False) -> float:
    """Distance of the clipped C_lam samples from the clipped C0 samples.

    By default the one-sided sup over C_lam of the distance to C0; with
    symmetric=True the Hausdorff distance of the two clouds.
    """
    A = _clip(C_lam, region)
    B = _clip(C0, region)
    if symmetric:
        return hausdorff(A, B)
    ta = cKDTree(np.concatenate([B.real, B.imag], 1))
    return float(ta.query(np.concatenate([A.real, A.imag], 1))[0].max())


def correspondence_check(C_lam, C0, P: BivariatePolynomial, omega: ConvexBody) -> dict:
    """Nearest-point map from C0 to C_lam inside omega: injectivity at sample scale and tangent agreement."""
    A = _clip(C0, omega)
    B = _clip(C_lam, omega)
    tb = cKDTree(np.concatenate([B.real, B.imag], 1))
    d, idx = tb.query(np.concatenate([A.real, A.imag], 1))
    spacing = float(np.median(cKDTree(np.concatenate([A.real, A.imag], 1)).query(
        np.concatenate([A.real, A.imag], 1), k=2)[0][:, 1]))
    # two C0 samples far apart must not share an image sample
    clash = 0
    order = np.argsort(idx)
    si = idx[order]
    for k in np.nonzero(np.diff(si) == 0)[0]:
        if norm(A[order[k]] - A[order[k + 1]]) > 4 * spacing + 2 * d.max():
            clash += 1

    def tangent(q):
        g = P.grad(q)
        t = np.stack([-g[:, 1], g[:, 0]], -1)
        return t / norm(t)[:, None]

    cosang = np.abs(hermitian(tangent(A), tangent(B[idx])))
    ang = float(np.arccos(np.clip(cosang.min(), 0, 1)))
    return {"injective": clash == 0, "clashes": clash, "max_dist": float(d.max()),
            "max_tangent_angle": ang, "spacing": spacing}


# --- the lambda sweep -------------------------------------------------------------------------------


def lambda_sweep(P: BivariatePolynomial, region: ConvexBody, eps: float, lam0: float = 0.1, count: int = 12,
                 h: float = 0.01) -> dict:
    """Dyadic sweep lam0, lam0/2, ...; picks the largest regular lam with proximity <= eps."""
    C0 = sample_level(P, 0, region, h)
    if not len(C0):
        raise ValueError("zero set misses the region")
    rows = []
    chosen = None
    for k in range(count):
        lam = lam0 / 2**k
        C, reg = level_shift(P, lam, region, h)
        try:
            prox = proximity_check(C, C0, region)
        except ValueError:
            prox = math.inf
        rows.append({"lambda": lam, "regular": bool(reg), "min_grad": C.min_grad, "hausdorff": prox})
        if chosen is None and reg and prox <= eps:
            chosen = lam
    return {"rows": rows, "chosen": chosen, "eps": eps}


def sweep_json(sweep: dict) -> str:
    return json.dumps(sweep, sort_keys=True, indent=1)


def write_critical_csv(points: list[CriticalPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["zeta_re", "zeta_im", "xi_re", "xi_im", "det_re", "det_im", "residual", "converged"])
        for c in points:
            p = c.point
            vals = (p[0].real, p[0].imag, p[1].real, p[1].imag, c.det.real, c.det.imag, c.residual)
            w.writerow([repr(float(v)) for v in vals] + [int(c.converged)])
