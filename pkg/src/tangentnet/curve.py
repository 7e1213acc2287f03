"""Holomorphic maps from a disc or annulus into C^2.

Maps are stored as coefficient arrays of shape (n, 2): row k multiplies
z^(k + low), with low = 0 for discs and low < 0 allowed on annuli. The
reference 1-form is dz, so C^1 norms use the plain complex derivative.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .convex import ConvexBody
from .geometry import from_real, hermitian, norm, to_real

IMMERSION_TOL = 1e-10


@dataclass(frozen=True)
class Domain:
    """Disc |z| <= outer (inner = 0) or annulus inner <= |z| <= outer."""

    outer: float
    inner: float = 0.0

    def __post_init__(self):
        if not (0 <= self.inner < self.outer):
            raise ValueError("need 0 <= inner < outer")

    @property
    def is_disc(self) -> bool:
        return self.inner == 0

    def contains(self, z, tol: float = 1e-12):
        r = np.abs(z)
        return (r <= self.outer * (1 + tol)) & (r >= self.inner * (1 - tol))

    def boundary_radii(self) -> list[float]:
        return [self.outer] if self.is_disc else [self.inner, self.outer]

    def polar_grid(self, nr: int = 64, nt: int = 256) -> np.ndarray:
        r0 = self.inner if not self.is_disc else 0.0
        r = np.linspace(r0, self.outer, nr)
        t = np.linspace(0, 2 * np.pi, nt, endpoint=False)
        return (r[:, None] * np.exp(1j * t)[None, :]).ravel()

    def square_grid(self, h: float):
        """Grid points of spacing h inside the domain, with integer indices."""
        n = int(math.ceil(self.outer / h))
        k = np.arange(-n, n + 1)
        I, J = np.meshgrid(k, k, indexing="ij")
        z = h * (I + 1j * J)
        m = self.contains(z, tol=0)
        return z[m], I[m], J[m]

    def to_dict(self):
        return {"outer": self.outer, "inner": self.inner}


@dataclass
class AnalyticMap:
    coeffs: np.ndarray
    domain: Domain
    low: int = 0
    check: bool = True
    min_speed: float = field(default=float("nan"), init=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[1] != 2 or len(c) == 0:
            raise ValueError("coefficients must have shape (n, 2)")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficients")
        if self.low < 0 and self.domain.is_disc:
            raise ValueError("negative powers need an annulus")
        self.coeffs = c
        if self.check:
            z = self.domain.polar_grid()
            sp = norm(self.deriv(z))
            self.min_speed = float(sp.min())
            scale = max(1.0, float(np.abs(c).max()))
            if not self.min_speed > IMMERSION_TOL * scale:
                raise ValueError(f"not an immersion: min |X'| = {self.min_speed:.3g}")

    @classmethod
    def polynomial(cls, c1, c2, radius: float = 1.0, **kw) -> "AnalyticMap":
        """From two coefficient lists in increasing powers."""
        n = max(len(c1), len(c2))
        c = np.zeros((n, 2), complex)
        c[: len(c1), 0] = c1
        c[: len(c2), 1] = c2
        return cls(c, Domain(radius), **kw)

    @property
    def degree(self) -> int:
        nz = np.nonzero(np.any(self.coeffs != 0, axis=1))[0]
        return int(nz[-1]) + self.low if len(nz) else 0

    def _horner(self, c, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (2,), complex)
        for k in range(len(c) - 1, -1, -1):
            out = out * z[..., None] + c[k]
        return out

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        v = self._horner(self.coeffs, z)
        return v * (z ** self.low)[..., None] if self.low else v

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        powers = np.arange(len(self.coeffs)) + self.low
        dc = self.coeffs * powers[:, None]
        if self.low == 0:
            return self._horner(dc[1:], z)
        return self._horner(dc, z) * (z ** (self.low - 1))[..., None]

    def with_domain(self, domain: Domain, check: bool = True) -> "AnalyticMap":
        return AnalyticMap(self.coeffs, domain, self.low, check)

    def to_dict(self):
        return {"domain": self.domain.to_dict(), "low": self.low, "degree": self.degree,
                "coeffs": [[[z.real, z.imag] for z in row] for row in self.coeffs]}

    @classmethod
    def from_dict(cls, d) -> "AnalyticMap":
        c = np.array([[complex(*z) for z in row] for row in d["coeffs"]])
        return cls(c, Domain(**d["domain"]), int(d.get("low", 0)))

    def write_csv(self, path, params) -> None:
        params = np.asarray(params, dtype=complex).ravel()
        X = to_real(self(params))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["param_re", "param_im", "re1", "im1", "re2", "im2"])
            for z, x in zip(params, X):
                w.writerow([repr(float(z.real)), repr(float(z.imag))] + [repr(float(v)) for v in x])


def c1_distance(f: AnalyticMap, g: AnalyticMap, K) -> float:
    """max over K of max(|f - g|, |f' - g'|)."""
    if f.domain != g.domain:
        raise ValueError("maps live on different domains")
    K = np.asarray(K, dtype=complex).ravel()
    c0 = norm(f(K) - g(K)).max()
    c1 = norm(f.deriv(K) - g.deriv(K)).max()
    return float(max(c0, c1))


def image_length(X: AnalyticMap, path) -> float:
    """Euclidean length of X along a parameter polyline (adaptive quadrature per segment)."""
    path = np.asarray(path, dtype=complex).ravel()
    if not np.all(X.domain.contains(path, tol=1e-9)):
        raise ValueError("path leaves the domain")
    total = 0.0
    for a, b in zip(path[:-1], path[1:]):
        mid = np.linspace(0, 1, 5)[1:-1]
        if not np.all(X.domain.contains(a + mid * (b - a), tol=1e-9)):
            raise ValueError("path leaves the domain")
        dz = b - a
        val, _ = quad(lambda t: float(norm(X.deriv(a + t * dz))), 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += val * abs(dz)
    return total


def circle_path(r: float, n: int = 4096, center: complex = 0.0) -> np.ndarray:
    t = np.linspace(0, 2 * np.pi, n + 1)
    return center + r * np.exp(1j * t)


# --- double points -------------------------------------------------------------------


@dataclass
class DoublePoint:
    w: np.ndarray
    P: complex
    Q: complex
    normal_crossing: bool
    det: float

    def to_dict(self):
        return {"w": [[z.real, z.imag] for z in self.w], "P": [self.P.real, self.P.imag],
                "Q": [self.Q.real, self.Q.imag], "normal_crossing": self.normal_crossing, "det": self.det}


def _newton_pair(X: AnalyticMap, P: complex, Q: complex, iters: int = 40, tol: float = 1e-14, sep: float = 0.0):
    """Damped Newton on X(P) - X(Q) = 0 (two complex equations, two unknowns)."""
    res = float(norm(X(P) - X(Q)))
    for _ in range(iters):
        if res < tol:
            break
        F = X(P) - X(Q)
        Jm = np.stack([X.deriv(P), -X.deriv(Q)], axis=1)
        try:
            step = np.linalg.solve(Jm, -F)
        except np.linalg.LinAlgError:
            return P, Q, res, False
        lam = 1.0
        while True:
            P1, Q1 = P + lam * step[0], Q + lam * step[1]
            r1 = float(norm(X(P1) - X(Q1)))
            if r1 < res:
                break
            lam /= 2
            if lam < 1e-3:
                return P, Q, res, False
        P, Q, res = P1, Q1, r1
        if abs(P - Q) < sep:
            return P, Q, res, False
    return P, Q, res, True


def double_points(X: AnalyticMap, tol: float = 1e-10, grid: int = 200, sep: float | None = None) -> list[DoublePoint]:
    """Pairs P != Q with X(P) = X(Q): grid pairing, then Newton refinement.

    Raises "not generic" when a coincidence is not isolated (overlapping
    sheets), detected by a degenerate Jacobian together with coincidences
    persisting at nearby parameters.
    """
    dom = X.domain
    h = 2 * dom.outer / grid
    z, _, _ = dom.square_grid(h)
    img = to_real(X(z))
    speed = norm(X.deriv(z)).max()
    sep = 4 * h if sep is None else sep
    tree = cKDTree(img)
    cand = tree.query_pairs(max(10 * tol, 1.5 * h * speed), output_type="ndarray")
    if len(cand):
        dz = np.abs(z[cand[:, 0]] - z[cand[:, 1]])
        dw = np.linalg.norm(img[cand[:, 0]] - img[cand[:, 1]], axis=1)
        loc = np.minimum(norm(X.deriv(z[cand[:, 0]])), norm(X.deriv(z[cand[:, 1]])))
        # neighbours on one sheet have dw close to |X'| dz; crossings have dw << dz
        cand = cand[(dz > sep) & (dw < 0.3 * loc * dz)]
        cand = cand[np.argsort(np.linalg.norm(img[cand[:, 0]] - img[cand[:, 1]], axis=1), kind="stable")]
        cells, keep = set(), []
        for i, j in cand:
            a, b = (i, j) if (z[i].real, z[i].imag) <= (z[j].real, z[j].imag) else (j, i)
            cell = tuple(int(v // (4 * h)) for v in (z[a].real, z[a].imag, z[b].real, z[b].imag))
            if cell not in cells:
                cells.add(cell)
                keep.append((a, b))
        cand = keep
    found: list[DoublePoint] = []
    keys = set()
    for i, j in cand:
        if any(abs(z[i] - d.P) + abs(z[j] - d.Q) < 8 * h or abs(z[i] - d.Q) + abs(z[j] - d.P) < 8 * h
               for d in found):
            continue
        P, Q, res, ok = _newton_pair(X, z[i], z[j], sep=sep / 4)
        if not ok or res > tol or abs(P - Q) < sep / 4:
            continue
        if not (dom.contains(P, tol=1e-9) and dom.contains(Q, tol=1e-9)):
            continue
        a, b = (P, Q) if (P.real, P.imag) <= (Q.real, Q.imag) else (Q, P)
        key = (round(a.real, 6), round(a.imag, 6), round(b.real, 6), round(b.imag, 6))
        if key in keys:
            continue
        dP, dQ = X.deriv(a), X.deriv(b)
        det = abs(dP[0] * dQ[1] - dP[1] * dQ[0]) / (norm(dP) * norm(dQ))
        if det < 1e-8 and _overlaps(X, a, b, h):
            raise ValueError("not generic: non-isolated self-coincidence")
        keys.add(key)
        found.append(DoublePoint(X(a), complex(a), complex(b), bool(det > 1e-8), float(det)))
    return found


def _overlaps(X: AnalyticMap, P: complex, Q: complex, h: float) -> bool:
    """Do parameters near P still have partners near Q?"""
    for d in (h, 1j * h):
        target = X(P + d)
        q = Q
        for _ in range(40):
            dq = X.deriv(q)
            q = q - hermitian(X(q) - target, dq) / hermitian(dq, dq)
        if norm(X(q) - target) < 1e-8:
            return True
    return False


# --- image distance ------------------------------------------------------------------

# half of the primitive lattice directions up to length sqrt(13)
_STENCIL = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2),
            (3, 1), (1, 3), (3, -1), (1, -3), (3, 2), (2, 3), (3, -2), (2, -3)]


def _segment_lengths(X: AnalyticMap, a: np.ndarray, b: np.ndarray, nodes: int = 4) -> np.ndarray:
    x, w = leggauss(nodes)
    t = 0.5 * (x + 1)
    dz = b - a
    pts = a[:, None] + t[None, :] * dz[:, None]
    sp = norm(X.deriv(pts))
    return 0.5 * (sp @ w) * np.abs(dz)


@dataclass
class GraphDistance:
    value: float
    nodes: int
    edges: int
    glued: int


def image_distance(X: AnalyticMap, P: complex, Q: complex, resolution: float = 0.02, glue: bool = True,
                   doubles: list[DoublePoint] | None = None, full: bool = False):
    """Shortest image length from X(P) to X(Q) over a parameter-grid graph.

    Edges follow the lattice stencil up to knight moves, weighted by the
    image length of the parameter segment (Gauss quadrature). With glue,
    the two preimages of every double point are joined by a zero-length
    edge, so paths may jump across image self-intersections.
    """
    dom = X.domain
    if not (dom.contains(P, tol=1e-9) and dom.contains(Q, tol=1e-9)):
        raise ValueError("endpoint outside the domain")
    h = resolution
    z, I, J = dom.square_grid(h)
    off = int(max(np.abs(I).max(), np.abs(J).max())) + 4
    lookup = np.full((2 * off + 1, 2 * off + 1), -1, dtype=np.int64)
    lookup[I + off, J + off] = np.arange(len(z))
    a_parts, b_parts = [], []
    for di, dj in _STENCIL:
        m = lookup[I + di + off, J + dj + off]
        ok = m >= 0
        a_parts.append(np.nonzero(ok)[0])
        b_parts.append(m[ok])
    a_idx = np.concatenate(a_parts)
    b_idx = np.concatenate(b_parts)
    wts = _segment_lengths(X, z[a_idx], z[b_idx])
    # straight segments between grid nodes can clip the hole of an annulus
    if not dom.is_disc:
        mid = 0.5 * (z[a_idx] + z[b_idx])
        ok = dom.contains(mid, tol=0)
        a_idx, b_idx, wts = a_idx[ok], b_idx[ok], wts[ok]
    extra = [complex(P), complex(Q)]
    glue_pairs = []
    if glue:
        if doubles is None:
            doubles = double_points(X)
        for dp in doubles:
            glue_pairs.append((len(extra), len(extra) + 1))
            extra += [dp.P, dp.Q]
    n = len(z)
    ez = np.array(extra)
    tree = cKDTree(np.stack([z.real, z.imag], 1))
    rows, cols, ws = [a_idx], [b_idx], [wts]
    for e, pt in enumerate(ez):
        near = tree.query_ball_point([pt.real, pt.imag], 2.3 * h)
        near = np.array([k for k in near if dom.is_disc or dom.contains(0.5 * (z[k] + pt), tol=0)], dtype=np.int64)
        if len(near) == 0:
            raise ValueError("resolution too coarse near an endpoint")
        rows.append(np.full(len(near), n + e))
        cols.append(near)
        ws.append(_segment_lengths(X, np.full(len(near), pt), z[near]))
    # extra nodes that sit close together (an endpoint on a double point) see each other directly
    for e in range(len(ez)):
        for f in range(e + 1, len(ez)):
            if abs(ez[e] - ez[f]) < 2.3 * h:
                rows.append(np.array([n + e]))
                cols.append(np.array([n + f]))
                ws.append(_segment_lengths(X, ez[e:e + 1], ez[f:f + 1]))
    for s, t in glue_pairs:
        rows.append(np.array([n + s]))
        cols.append(np.array([n + t]))
        ws.append(np.array([0.0]))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    w = np.maximum(np.concatenate(ws), 1e-300)
    G = coo_matrix((w, (r, c)), shape=(n + len(ez),) * 2).tocsr()
    d = dijkstra(G, directed=False, indices=n)
    val = float(d[n + 1])
    if full:
        return GraphDistance(val, n + len(ez), len(w), len(glue_pairs))
    return val


# --- boundary behaviour ------------------------------------------------------------------


def boundary_samples(X: AnalyticMap, n: int = 2048) -> list[np.ndarray]:
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return [r * np.exp(1j * t) for r in X.domain.boundary_radii()]


def transversal_boundary(X: AnalyticMap, D: ConvexBody, tol: float = 1e-2, on_tol: float = 1e-6,
                         n: int = 2048, circles: list[int] | None = None) -> bool:
    """X(boundary) meets Fr D transversally: |<<X', nu>>| / |X'| > tol at every sample."""
    rings = boundary_samples(X, n)
    if circles is not None:
        rings = [rings[i] for i in circles]
    worst = math.inf
    for zb in rings:
        Y = X(zb)
        g = D.gauge(Y)
        k = int(np.argmax(np.abs(g - 1)))
        if abs(g[k] - 1) > on_tol:
            raise ValueError(f"boundary sample z={zb[k]:.6g} is not on Fr D (gauge {g[k]:.6g})")
        nu = D.outward_normal(Y, tol=on_tol)
        dX = X.deriv(zb)
        worst = min(worst, float((np.abs(hermitian(dX, nu)) / norm(dX)).min()))
    return worst > tol


@dataclass
class BoundaryPartition:
    """Per boundary circle: J equal parameter arcs [start_j, start_j + 2 pi / J] and their skeleton points."""

    radii: list
    J: list
    starts: list
    assigned: list
    skeleton: np.ndarray
    radius: float

    def junctions(self, c: int) -> np.ndarray:
        """Parameter angle of Q_j, the common endpoint of arcs j and j + 1."""
        return np.asarray(self.starts[c]) + 2 * np.pi / self.J[c]

    def arc_params(self, c: int, j: int, n: int = 64) -> np.ndarray:
        a0 = self.starts[c][j]
        t = np.linspace(a0, a0 + 2 * np.pi / self.J[c], n)
        return self.radii[c] * np.exp(1j * t)

    def validate(self, X: AnalyticMap, D: ConvexBody, delta: float, n: int = 64) -> None:
        for c in range(len(self.radii)):
            Jc = self.J[c]
            if Jc < 3:
                raise ValueError("need J >= 3")
            st = np.asarray(self.starts[c])
            # (i) cover and (ii)/(iii) adjacency: equal consecutive arcs around the circle
            gaps = np.diff(np.concatenate([st, [st[0] + 2 * np.pi]]))
            if not np.allclose(gaps, 2 * np.pi / Jc, atol=1e-12):
                raise ValueError("arcs do not tile the circle")
            for j in range(Jc):
                z = self.arc_params(c, j, n)
                Y = X(z)
                p = self.skeleton[self.assigned[c][j]]
                nu = D.outward_normal(p, tol=1e-6)
                off = np.abs(np.real(hermitian(Y - p, nu)))
                if off.max() >= self.radius:
                    raise ValueError(f"arc ({c},{j}) leaves its slab (offset {off.max():.4g})")
                if D.signed_distance(Y).max() >= delta:
                    raise ValueError(f"arc ({c},{j}) leaves D_delta")


def split_boundary(X: AnalyticMap, net, D: ConvexBody, delta: float, n: int = 2048, J_max: int = 4096,
                   threshold: float | None = None) -> BoundaryPartition:
    """Split each boundary circle into J >= 3 arcs, each inside one slab of the net.

    J doubles from 3 until every arc image has diameter below the
    slab-fitting threshold sqrt(2 eps / kappa) and some slab holds the whole
    arc. The first arc is centred at the boundary parameter closest to the
    first skeleton point, so arcs sit around skeleton points.
    """
    from .net import net_distance

    kappa = D.kappa_max()
    threshold = math.sqrt(2 * net.radius / kappa) if threshold is None else threshold
    rings = boundary_samples(X, n)
    for zb in rings:
        Y = X(zb)
        off = net_distance(net, Y)
        sd = D.signed_distance(Y)
        bad = np.nonzero((off >= net.radius) | (sd >= delta))[0]
        if len(bad):
            k = int(bad[0])
            raise ValueError(f"boundary sample z={zb[k]:.6g} is not in the net cap D_delta")
    P0 = net.skeleton[0]
    radii = X.domain.boundary_radii()
    starts, assigned, Js = [], [], []
    P = to_real(net.skeleton)
    Nn = to_real(net.normals)
    for zb, r in zip(rings, radii):
        Y = X(zb)
        t0 = float(np.angle(zb[int(np.argmin(norm(Y - P0)))]))
        J = 3
        while True:
            if J > J_max:
                raise ValueError("could not split the boundary within J_max arcs")
            st = t0 - np.pi / J + 2 * np.pi * np.arange(J) / J
            ok = True
            asg = []
            for j in range(J):
                z = r * np.exp(1j * np.linspace(st[j], st[j] + 2 * np.pi / J, 64))
                Yr = to_real(X(z))
                diam = np.max(np.linalg.norm(Yr[:, None] - Yr[None], axis=-1))
                off = np.abs(Yr @ Nn.T - np.sum(P * Nn, axis=1)).max(axis=0)
                fits = np.nonzero(off < net.radius)[0]
                if diam >= threshold or len(fits) == 0:
                    ok = False
                    break
                mid = Yr[len(Yr) // 2]
                asg.append(int(fits[np.argmin(np.linalg.norm(P[fits] - mid, axis=1))]))
            if ok:
                break
            J *= 2
        starts.append(st)
        assigned.append(asg)
        Js.append(J)
    part = BoundaryPartition(radii, Js, starts, assigned, net.skeleton, net.radius)
    part.validate(X, D, delta)
    return part
