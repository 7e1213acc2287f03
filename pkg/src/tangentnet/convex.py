"""Bounded strictly convex bodies in R^4 = C^2 and the distance functional dee.

Bodies work internally in real coordinates (..., 4); public queries accept
either complex (..., 2) points or real (..., 4) points and return complex
normals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from .geometry import from_real, to_real

BOUNDARY_TOL = 1e-8
PHI = math.sqrt(2.0)
PSI = 1.533751168755204288118041


def _real(p) -> np.ndarray:
    a = np.asarray(p)
    if np.iscomplexobj(a) or a.shape[-1:] == (2,):
        return to_real(a)
    return np.asarray(a, dtype=float)


def sphere_lattice(n: int) -> np.ndarray:
    """Super-Fibonacci points on S^3, shape (n, 4)."""
    s = np.arange(n) + 0.5
    r = np.sqrt(s / n)
    R = np.sqrt(1.0 - s / n)
    a = 2 * np.pi * s / PHI
    b = 2 * np.pi * s / PSI
    return np.stack([r * np.sin(a), r * np.cos(a), R * np.sin(b), R * np.cos(b)], axis=1)


def _tangent_basis(n: np.ndarray) -> np.ndarray:
    """Orthonormal basis (3, 4) of the hyperplane orthogonal to unit n."""
    _, _, vt = np.linalg.svd(n[None, :])
    return vt[1:]


class ConvexBody:
    """Base class. Subclasses provide gauge, signed distance and second-order data."""

    kind = "abstract"
    center: np.ndarray

    # --- required by subclasses -------------------------------------------------
    def _gauge(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _sd(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _normal(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _curvatures(self, x: np.ndarray) -> np.ndarray:
        """Principal curvatures (3,) at boundary point x, w.r.t. the inner normal."""
        raise NotImplementedError

    def support(self, u) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    # --- public queries -----------------------------------------------------------
    def gauge(self, p):
        """Minkowski gauge about the center; 1 on the boundary."""
        return self._gauge(_real(p))

    def signed_distance(self, p):
        """Negative inside, positive outside."""
        return self._sd(_real(p))

    def contains(self, p, strict: bool = True):
        g = self.gauge(p)
        return g < 1 if strict else g <= 1

    def project_radial(self, directions: np.ndarray) -> np.ndarray:
        """Boundary points center + d / gauge(center + d) for real directions d."""
        d = np.asarray(directions, dtype=float)
        g = self._gauge(self.center + d)
        return self.center + d / g[..., None]

    def chart(self, directions: np.ndarray) -> np.ndarray:
        """Boundary point attached to each real direction; radial by default."""
        return self.project_radial(directions)

    def boundary_samples(self, n: int) -> np.ndarray:
        return self.chart(sphere_lattice(n))

    def ray_exit(self, x: np.ndarray, u: np.ndarray, iters: int = 60) -> np.ndarray:
        """t > 0 with x + t u on the boundary, for real x inside and unit real u (broadcast)."""
        x, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(u, float))
        lo = np.zeros(x.shape[:-1])
        hi = np.full(x.shape[:-1], 1.0)
        while True:
            grow = self._gauge(x + hi[..., None] * u) < 1
            if not np.any(grow):
                break
            hi = np.where(grow, 2 * hi, hi)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            inside = self._gauge(x + mid[..., None] * u) < 1
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return 0.5 * (lo + hi)

    def outward_normal(self, p, tol: float = 1e-6):
        x = _real(p)
        g = self._gauge(x)
        if np.any(np.abs(g - 1) > tol):
            raise ValueError("point is not on the boundary")
        return from_real(self._normal(x))

    def principal_curvatures(self, p) -> np.ndarray:
        x = _real(p)
        if x.ndim == 1:
            return self._curvatures(x)
        return np.array([self._curvatures(xi) for xi in x])

    def kappa_max(self) -> float:
        return _sampled_kappa_max(self)

    def diameter(self) -> float:
        u = sphere_lattice(2000)
        return float(np.max(self.support(u) + self.support(-u)))


def _sampled_kappa_max(body: ConvexBody, n: int = 4000, rounds: int = 2, rtol: float = 1e-6) -> float:
    """Largest principal curvature over a boundary lattice, then polished by local ascent."""
    dirs = sphere_lattice(n)
    pts = body.chart(dirs)
    kap = np.array([body._curvatures(x).max() for x in pts])
    if np.any(kap <= 0):
        raise ValueError("not strictly convex")
    order = np.argsort(kap)[::-1][:8]

    def neg(d):
        x = body.chart((d / np.linalg.norm(d))[None])[0]
        return -body._curvatures(x).max()

    best = kap.max()
    for _ in range(rounds):
        prev = best
        for i in order:
            res = minimize(neg, dirs[i], method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
            best = max(best, -res.fun)
        if abs(best - prev) <= rtol * best:
            break
    return float(best)


@dataclass(frozen=True)
class Ball(ConvexBody):
    radius: float
    center: np.ndarray = field(default_factory=lambda: np.zeros(4))
    kind = "ball"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", _real(np.asarray(self.center)).reshape(4).astype(float))

    def _gauge(self, x):
        return np.linalg.norm(x - self.center, axis=-1) / self.radius

    def _sd(self, x):
        return np.linalg.norm(x - self.center, axis=-1) - self.radius

    def _normal(self, x):
        d = x - self.center
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def _closest(self, x):
        return self.center + self.radius * self._normal(x)

    def _curvatures(self, x):
        return np.full(3, 1.0 / self.radius)

    def support(self, u):
        u = _real(u)
        return u @ self.center + self.radius * np.linalg.norm(u, axis=-1)

    def ray_exit(self, x, u, iters: int = 0):
        y = np.asarray(x, float) - self.center
        u = np.asarray(u, float)
        b = np.sum(y * u, axis=-1)
        c = np.sum(y * y, axis=-1) - self.radius**2
        return -b + np.sqrt(np.maximum(b * b - c, 0.0))

    def kappa_max(self) -> float:
        return 1.0 / self.radius

    def diameter(self) -> float:
        return 2.0 * self.radius

    def to_dict(self):
        return {"kind": "ball", "center": [float(c) for c in self.center], "radius": float(self.radius)}


@dataclass(frozen=True)
class Ellipsoid(ConvexBody):
    """{c + Q y : sum (y_i / a_i)^2 < 1} with orthonormal columns of Q."""

    axes: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(4))
    frame: np.ndarray = field(default_factory=lambda: np.eye(4))
    kind = "ellipsoid"

    def __post_init__(self):
        a = np.asarray(self.axes, dtype=float).reshape(4)
        if np.any(a <= 0):
            raise ValueError("semi-axes must be positive")
        q = np.asarray(self.frame, dtype=float).reshape(4, 4)
        if np.abs(q.T @ q - np.eye(4)).max() > 1e-10:
            raise ValueError("frame must be orthonormal")
        object.__setattr__(self, "axes", a)
        object.__setattr__(self, "frame", q)
        object.__setattr__(self, "center", _real(np.asarray(self.center)).reshape(4).astype(float))

    def _local(self, x):
        return (x - self.center) @ self.frame

    def _gauge(self, x):
        return np.sqrt(np.sum((self._local(x) / self.axes) ** 2, axis=-1))

    def _sd(self, x):
        y = np.atleast_2d(self._local(x))
        d = _ellipsoid_sd(y, self.axes)
        return d.reshape(np.shape(x)[:-1])

    def _closest(self, x):
        y = np.atleast_2d(self._local(x))
        c = _ellipsoid_closest(y, self.axes)[0] @ self.frame.T + self.center
        return c.reshape(np.shape(x))

    def _normal(self, x):
        y = self._local(x)
        g = (y / self.axes**2) @ self.frame.T
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def _curvatures(self, x):
        y = self._local(x)
        grad = y / self.axes**2
        gn = np.linalg.norm(grad)
        B = _tangent_basis(grad / gn)
        H = np.diag(1.0 / self.axes**2)
        return np.sort(np.linalg.eigvalsh(B @ H @ B.T) / gn)

    def support(self, u):
        u = _real(u)
        return u @ self.center + np.linalg.norm((u @ self.frame) * self.axes, axis=-1)

    def ray_exit(self, x, u, iters: int = 0):
        y = self._local(np.asarray(x, float)) / self.axes
        v = (np.asarray(u, float) @ self.frame) / self.axes
        a = np.sum(v * v, axis=-1)
        b = np.sum(y * v, axis=-1)
        c = np.sum(y * y, axis=-1) - 1.0
        return (-b + np.sqrt(np.maximum(b * b - a * c, 0.0))) / a

    def kappa_max(self) -> float:
        # attained at the tips of the longest axis, bending toward the shortest
        return float(self.axes.max() / self.axes.min() ** 2)

    def diameter(self) -> float:
        return 2.0 * float(self.axes.max())

    def to_dict(self):
        return {"kind": "ellipsoid", "center": [float(c) for c in self.center],
                "axes": [float(a) for a in self.axes], "frame": self.frame.tolist()}


def _ellipsoid_sd(y: np.ndarray, a: np.ndarray) -> np.ndarray:
    return _ellipsoid_closest(y, a)[1]


def _ellipsoid_closest(y: np.ndarray, a: np.ndarray, iters: int = 60):
    """Closest boundary point and signed distance for the axis-aligned ellipsoid sum (y/a)^2 = 1.

    The closest point is a_i^2 y_i / (a_i^2 + lam) where lam solves
    F(lam) = sum (a_i y_i / (a_i^2 + lam))^2 - 1 = 0. F decreases on
    (-min a^2, inf), so a bracketed Newton iteration finds the root for
    points on either side.
    """
    a2 = a**2
    g2 = np.sum((y / a) ** 2, axis=1)
    out = g2 >= 1
    amin2 = a2.min()
    ay2 = (a * y) ** 2
    lo = np.where(out, 0.0, -amin2)
    hi = np.where(out, a.max() * np.linalg.norm(y, axis=1), 0.0)
    lam = 0.5 * (lo + hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(iters):
            den = a2 + lam[:, None]
            F = np.sum(ay2 / den**2, axis=1) - 1
            dF = -2 * np.sum(ay2 / den**3, axis=1)
            lo = np.where(F > 0, lam, lo)
            hi = np.where(F > 0, hi, lam)
            step = lam - F / dF
            bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
            lam = np.where(bad, 0.5 * (lo + hi), step)
        x = a2 * y / (a2 + lam[:, None])
        # inside points with no component along the shortest axes: the root sits
        # at the pole -amin^2 and the closest point follows from the constraint
        edge = ~out & (np.sum(ay2 / (a2 - amin2 * (1 - 1e-12)) ** 2, axis=1) - 1 < 0)
    d = np.linalg.norm(x - y, axis=1)
    if np.any(edge):
        small = np.isclose(a2, amin2, rtol=1e-12)
        for i in np.nonzero(edge)[0]:
            yi = y[i]
            xi = np.zeros(4)
            xi[~small] = a2[~small] * yi[~small] / (a2[~small] - amin2)
            rest = 1.0 - np.sum((xi[~small] / a[~small]) ** 2)
            ys = yi[small]
            ns = np.linalg.norm(ys)
            dirn = ys / ns if ns > 1e-300 else np.eye(int(small.sum()))[0]
            xi[small] = np.sqrt(max(rest, 0.0)) * a[small][0] * dirn
            x[i] = xi
            d[i] = np.linalg.norm(xi - yi)
    return x, np.where(out, d, -d)


@dataclass(frozen=True)
class LevelSetBody(ConvexBody):
    """{f < 0} for a smooth convex f on R^4 with f(center) < 0.

    f, grad and hess act on real 4-vectors. Curvature suprema are sampled
    lower estimates for this kind.
    """

    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    center: np.ndarray = field(default_factory=lambda: np.zeros(4))
    radius_hint: float = 10.0
    kind = "levelset"

    def __post_init__(self):
        object.__setattr__(self, "center", _real(np.asarray(self.center)).reshape(4).astype(float))
        if not self.f(self.center) < 0:
            raise ValueError("center must lie inside the body")

    def _ray_hit(self, d):
        lo, hi = 0.0, self.radius_hint
        while self.f(self.center + hi * d) < 0:
            hi *= 2
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.f(self.center + mid * d) < 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def _gauge(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 4) - self.center
        out = np.empty(len(flat))
        for i, v in enumerate(flat):
            n = np.linalg.norm(v)
            out[i] = 0.0 if n == 0 else n / self._ray_hit(v / n)
        return out.reshape(x.shape[:-1])

    def _project(self, y):
        """Closest boundary point by Newton on the Lagrange system."""
        x = self.project_radial((y - self.center)[None])[0] if np.linalg.norm(y - self.center) > 0 \
            else self.project_radial(np.eye(4)[:1])[0]
        lam = 0.0
        for _ in range(60):
            g = self.grad(x)
            H = self.hess(x)
            r = np.concatenate([x - y + lam * g, [self.f(x)]])
            J = np.zeros((5, 5))
            J[:4, :4] = np.eye(4) + lam * H
            J[:4, 4] = g
            J[4, :4] = g
            step = np.linalg.solve(J, -r)
            x = x + step[:4]
            lam = lam + step[4]
            if np.linalg.norm(step) < 1e-14:
                break
        return x

    def _closest(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([self._project(y) for y in x.reshape(-1, 4)]).reshape(x.shape)

    def _sd(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 4)
        out = np.empty(len(flat))
        for i, y in enumerate(flat):
            p = self._project(y)
            s = np.sign(self.f(y)) or 0.0
            out[i] = s * np.linalg.norm(p - y)
        return out.reshape(x.shape[:-1])

    def _normal(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 4)
        g = np.array([self.grad(v) for v in flat])
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g.reshape(x.shape)

    def _curvatures(self, x):
        g = self.grad(x)
        gn = np.linalg.norm(g)
        if gn == 0:
            raise ValueError("singular boundary point")
        B = _tangent_basis(g / gn)
        return np.sort(np.linalg.eigvalsh(B @ self.hess(x) @ B.T) / gn)

    def support(self, u):
        u = np.atleast_2d(_real(u))
        pts = self.boundary_samples(4000)
        h = np.max(pts @ u.T, axis=0)
        out = []
        for ui, hi in zip(u, h):
            n = np.linalg.norm(ui)
            if n == 0:
                out.append(0.0)
                continue
            # the maximizer has outward normal parallel to u; polish by ray search on that normal
            res = minimize(lambda d: -(self.project_radial((d / np.linalg.norm(d))[None])[0] @ ui),
                           pts[np.argmax(pts @ ui)] - self.center, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-13})
            out.append(max(hi, -res.fun))
        return np.array(out)

    def to_dict(self):
        raise TypeError("level-set bodies wrap arbitrary callables and do not serialize")


@dataclass(frozen=True)
class ParallelBody(ConvexBody):
    """Boundary pushed distance t along the outward normal of the base body."""

    base: ConvexBody
    t: float
    kind = "parallel"

    def __post_init__(self):
        object.__setattr__(self, "center", self.base.center)

    def _sd(self, x):
        return self.base._sd(x) - self.t

    def _gauge(self, x):
        # the parallel body is star-shaped about the base center; solve sd = 0 along rays
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 4) - self.center
        n = np.linalg.norm(flat, axis=1)
        dirs = flat / np.where(n > 0, n, 1)[:, None]
        lo = np.zeros(len(flat))
        hi = np.full(len(flat), self.base.diameter() + abs(self.t) + 1.0)
        for _ in range(70):
            mid = 0.5 * (lo + hi)
            inside = self._sd(self.center + mid[:, None] * dirs) < 0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        r = 0.5 * (lo + hi)
        return (n / r).reshape(x.shape[:-1])

    def _foot(self, x):
        """Base boundary point whose normal line through it reaches x."""
        return self.base._closest(x)

    def _closest(self, x):
        f = np.asarray(self._foot(x))
        return f + self.t * self.base._normal(f)

    def chart(self, directions):
        b = self.base.chart(directions)
        return b + self.t * self.base._normal(b)

    def _normal(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 4)
        out = np.array([self.base._normal(self._foot(v)) for v in flat])
        return out.reshape(x.shape)

    def _curvatures(self, x):
        k = self.base._curvatures(self._foot(np.asarray(x, dtype=float)))
        return k / (1.0 + self.t * k)

    def support(self, u):
        u = _real(u)
        return self.base.support(u) + self.t * np.linalg.norm(u, axis=-1)

    def kappa_max(self) -> float:
        k = self.base.kappa_max()
        # x / (1 + t x) is increasing, so the supremum moves with the base supremum
        return k / (1.0 + self.t * k)

    def diameter(self) -> float:
        return self.base.diameter() + 2 * self.t

    def to_dict(self):
        return {"kind": "parallel", "t": float(self.t), "base": self.base.to_dict()}


def parallel_body(body: ConvexBody, t: float) -> ConvexBody:
    """Parallel body at oriented distance t, defined for t > -1/kappa_max."""
    k = body.kappa_max()
    if not t > -1.0 / k:
        raise ValueError("parallel body degenerate")
    if isinstance(body, Ball):
        return Ball(body.radius + t, body.center)
    if isinstance(body, ParallelBody):
        return ParallelBody(body.base, body.t + t)
    if t == 0:
        return body
    return ParallelBody(body, float(t))


def body_from_dict(d: dict) -> ConvexBody:
    kind = d["kind"]
    if kind == "ball":
        return Ball(float(d["radius"]), np.asarray(d.get("center", np.zeros(4)), dtype=float))
    if kind == "ellipsoid":
        return Ellipsoid(np.asarray(d["axes"], dtype=float), np.asarray(d.get("center", np.zeros(4)), dtype=float),
                         np.asarray(d.get("frame", np.eye(4)), dtype=float))
    if kind == "parallel":
        return ParallelBody(body_from_dict(d["base"]), float(d["t"]))
    raise ValueError(f"unknown body kind {kind!r}")


# --- pair metrics --------------------------------------------------------------------


def _same_base(D: ConvexBody, Dp: ConvexBody):
    def split(b):
        if isinstance(b, ParallelBody):
            return b.base, b.t
        return b, 0.0

    bd, td = split(D)
    bp, tp = split(Dp)
    if bd is bp:
        return td, tp
    return None


def contained_in(D: ConvexBody, Dp: ConvexBody, n: int = 1000) -> bool:
    """Sampled check that the closure of D lies inside Dp."""
    pts = D.boundary_samples(n)
    return bool(np.all(Dp._sd(pts) < 0))


def dist_pair(D: ConvexBody, Dp: ConvexBody, n: int = 4000) -> float:
    """dist(closure D, Fr Dp) for D compactly inside Dp."""
    if isinstance(D, Ball) and isinstance(Dp, Ball):
        d = Dp.radius - np.linalg.norm(D.center - Dp.center) - D.radius
        if d <= 0:
            raise ValueError("containment violated")
        return float(d)
    tt = _same_base(D, Dp)
    if tt is not None:
        if tt[1] <= tt[0]:
            raise ValueError("containment violated")
        return float(tt[1] - tt[0])
    if not contained_in(D, Dp, min(n, 1000)):
        raise ValueError("containment violated")
    dirs = sphere_lattice(n)
    pts = Dp.chart(dirs)
    sd = D._sd(pts)
    if np.any(sd <= 0):
        raise ValueError("containment violated")
    best = float(sd.min())
    for i in np.argsort(sd)[:4]:
        res = minimize(lambda d: float(D._sd(Dp.chart((d / np.linalg.norm(d))[None]))[0]),
                       dirs[i], method="Nelder-Mead", options={"xatol": 1e-11, "fatol": 1e-14, "maxiter": 3000})
        best = min(best, float(res.fun))
    return best


@dataclass(frozen=True)
class PairMetrics:
    dist: float
    kappa: float
    dee: float

    def to_dict(self):
        return {"dist": self.dist, "kappa": self.kappa, "dee": self.dee}


def dee_value(dist: float, kappa: float) -> float:
    """(dist + 1/kappa) sqrt(dist / (dist + 2/kappa))."""
    r = 1.0 / kappa
    return (dist + r) * math.sqrt(dist / (dist + 2 * r))


def dee(D: ConvexBody, Dp: ConvexBody) -> PairMetrics:
    d = dist_pair(D, Dp)
    k = D.kappa_max()
    return PairMetrics(dist=d, kappa=k, dee=dee_value(d, k))


def hausdorff(K, O) -> float:
    """Hausdorff distance between two finite point clouds."""
    K = _cloud(K)
    O = _cloud(O)
    if len(K) == 0 or len(O) == 0:
        raise ValueError("empty point cloud")
    a = cKDTree(O).query(K)[0].max()
    b = cKDTree(K).query(O)[0].max()
    return float(max(a, b))


def _cloud(P) -> np.ndarray:
    P = np.asarray(P)
    if np.iscomplexobj(P):
        P = np.concatenate([P.real, P.imag], axis=-1) if P.ndim > 1 else np.stack([P.real, P.imag], -1)
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    return P


# --- refinement chains ----------------------------------------------------------------


def harmonic_threshold(d: float, kappa: float) -> float:
    return math.sqrt((6 * d * kappa**2 + 2 * math.pi**2 * kappa) / (6 * d))


def chain_length(d: float, kappa: float) -> int:
    """Smallest m whose harmonic sum H_m reaches the threshold."""
    thr = harmonic_threshold(d, kappa)
    m, h = 0, 0.0
    while h < thr:
        m += 1
        h += 1.0 / m
    return m


def chain_offsets(d: float, m: int) -> np.ndarray:
    """d (6/pi^2) sum_{h<=a} 1/h^2 for a = 1..m."""
    return d * 6 / math.pi**2 * np.cumsum(1.0 / np.arange(1, m + 1) ** 2)


def refine_pair(Cj: ConvexBody, Cj1: ConvexBody) -> list[ConvexBody]:
    """Nested chain Cj = C^0, C^1, ..., C^m of parallel bodies strictly inside Cj1."""
    d = dist_pair(Cj, Cj1)
    k = Cj.kappa_max()
    m = chain_length(d, k)
    return [Cj] + [parallel_body(Cj, float(t)) for t in chain_offsets(d, m)]


@dataclass
class DProperSequence:
    bodies: list
    metrics: list
    running: list
    target: float
    success: bool
    chains: int = 0

    @property
    def total(self) -> float:
        return self.running[-1] if self.running else 0.0

    def to_dict(self):
        return {"bodies": [b.to_dict() for b in self.bodies],
                "metrics": [m.to_dict() for m in self.metrics],
                "running": list(self.running), "target": self.target,
                "success": self.success, "chains": self.chains}


def d_proper_sequence(exhaustion: Sequence[ConvexBody], target: float) -> DProperSequence:
    """Interleave refine_pair chains over the exhaustion until the dee-sum reaches target."""
    if len(exhaustion) < 2:
        raise ValueError("need at least two bodies")
    for a, b in zip(exhaustion, exhaustion[1:]):
        if not contained_in(a, b, 500):
            raise ValueError("exhaustion is not nested")
    bodies = [exhaustion[0]]
    metrics, running = [], []
    total = 0.0
    chains = 0
    for j in range(len(exhaustion) - 1):
        chain = refine_pair(exhaustion[j], exhaustion[j + 1])[1:] + [exhaustion[j + 1]]
        chains += 1
        for nxt in chain:
            pm = dee(bodies[-1], nxt)
            bodies.append(nxt)
            metrics.append(pm)
            total += pm.dee
            running.append(total)
            if total >= target:
                return DProperSequence(bodies, metrics, running, target, True, chains)
    return DProperSequence(bodies, metrics, running, target, False, chains)
