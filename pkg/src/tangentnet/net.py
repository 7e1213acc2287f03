"""Tangent nets: unions of thickened tangent hyperplanes of a strictly convex body.

A net of radius eps with skeleton {p_k} is the set of points within eps of
some affine tangent hyperplane p_k + T_{p_k} Fr D. The builder picks the
skeleton along a set of boundary arcs so that every arc lies in the net and
every path crossing the net from Fr D to Fr D' is long.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .convex import Ball, ConvexBody, _real, _tangent_basis, dee, dist_pair
from .geometry import ALG_TOL, complex_orthogonal, from_real, hermitian, to_real

ON_BOUNDARY_TOL = 1e-6


@dataclass(frozen=True)
class Slab:
    base: np.ndarray
    normal: np.ndarray
    halfwidth: float

    def contains(self, q) -> np.ndarray:
        q = _real(q)
        return np.abs((q - _real(self.base)) @ _real(self.normal)) < self.halfwidth


@dataclass
class BoundaryArcSet:
    """Arcs and closed curves on Fr D, each given by ordered samples (complex (n, 2))."""

    arcs: list
    closed: list = field(default_factory=list)

    def __post_init__(self):
        self.arcs = [np.atleast_2d(np.asarray(a, dtype=complex)) for a in self.arcs]
        if not self.closed:
            self.closed = [False] * len(self.arcs)
        if len(self.closed) != len(self.arcs):
            raise ValueError("one closed flag per arc")
        self.cumlen = []
        for a, c in zip(self.arcs, self.closed):
            pts = np.vstack([a, a[:1]]) if c else a
            seg = np.linalg.norm(to_real(np.diff(pts, axis=0)), axis=1)
            self.cumlen.append(np.concatenate([[0.0], np.cumsum(seg)]))

    @property
    def mu(self) -> int:
        return len(self.arcs)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([c[-1] for c in self.cumlen])

    @property
    def bigL(self) -> float:
        return 1.0 + float(self.lengths.max()) if self.arcs else 1.0

    def samples(self) -> np.ndarray:
        return np.vstack(self.arcs) if self.arcs else np.zeros((0, 2), complex)

    def check_on(self, body: ConvexBody, tol: float = ON_BOUNDARY_TOL):
        for i, a in enumerate(self.arcs):
            g = body.gauge(a)
            k = int(np.argmax(np.abs(g - 1)))
            if abs(g[k] - 1) > tol:
                raise ValueError(f"arc {i} sample {k} is off the boundary (gauge {g[k]:.3g})")

    def at_length(self, i: int, s: np.ndarray) -> np.ndarray:
        """Linear interpolation of arc i at arclength positions s."""
        a = self.arcs[i]
        pts = np.vstack([a, a[:1]]) if self.closed[i] else a
        x = to_real(pts)
        out = np.stack([np.interp(s, self.cumlen[i], x[:, k]) for k in range(4)], axis=-1)
        return from_real(out)

    @classmethod
    def from_directions(cls, body: ConvexBody, curves: Sequence[np.ndarray], closed: Sequence[bool] | None = None):
        """Arcs given as sequences of real directions, pushed to Fr D by the body's chart."""
        arcs = [from_real(body.chart(np.asarray(c, float))) for c in curves]
        return cls(arcs, list(closed) if closed is not None else [])


@dataclass
class TangentNet:
    body: ConvexBody
    skeleton: np.ndarray
    radius: float
    normals: np.ndarray = None
    # filled by build_net
    m: int | None = None
    mu: int | None = None
    bigL: float | None = None
    kappa: float | None = None
    d0: float | None = None
    eps: float | None = None

    def __post_init__(self):
        self.skeleton = np.asarray(self.skeleton, dtype=complex).reshape(-1, 2)
        if not self.radius > 0:
            raise ValueError("net radius must be positive")
        if len(self.skeleton):
            g = self.body.gauge(self.skeleton)
            if np.any(np.abs(g - 1) > ON_BOUNDARY_TOL):
                raise ValueError("skeleton point off the boundary")
        if self.normals is None:
            self.normals = (self.body.outward_normal(self.skeleton, tol=ON_BOUNDARY_TOL)
                            if len(self.skeleton) else np.zeros((0, 2), complex))

    def __len__(self):
        return len(self.skeleton)

    def slabs(self) -> list[Slab]:
        return [Slab(p, n, self.radius) for p, n in zip(self.skeleton, self.normals)]

    def slab_offsets(self, q) -> np.ndarray:
        """|<q - p_k, nu_k>| for every skeleton point, shape (..., k)."""
        q = _real(q)
        P, N = to_real(self.skeleton), to_real(self.normals)
        return np.abs(q @ N.T - np.sum(P * N, axis=1))

    def contains(self, q) -> np.ndarray:
        return net_distance(self, q) < self.radius

    def with_skeleton(self, skeleton) -> "TangentNet":
        return TangentNet(self.body, skeleton, self.radius, None, self.m, self.mu, self.bigL,
                          self.kappa, self.d0, self.eps)

    def to_dict(self):
        return {"radius": self.radius, "skeleton": [[[z.real, z.imag] for z in p] for p in self.skeleton],
                "m": self.m, "mu": self.mu, "bigL": self.bigL, "kappa": self.kappa, "d0": self.d0,
                "eps": self.eps, "body": self.body.to_dict()}


def net_distance(net: TangentNet, q):
    """Distance from q to the union of the tangent hyperplanes."""
    if len(net) == 0:
        raise ValueError("empty skeleton")
    return net.slab_offsets(q).min(axis=-1)


# --- the builder ------------------------------------------------------------------------


def eps_m(bigL: float, kappa: float, m: int) -> float:
    return (1.0 - math.cos(bigL * kappa / m)) / kappa


def net_condition(m: int, mu: int, bigL: float, kappa: float, d0: float) -> float:
    """max(eps_m, 4 (m mu + 1) eps_m / sqrt((d0 kappa + 1)^2 - 1))."""
    e = eps_m(bigL, kappa, m)
    return max(e, 4 * (m * mu + 1) * e / math.sqrt((d0 * kappa + 1) ** 2 - 1))


def smallest_m(mu: int, bigL: float, kappa: float, d0: float, eps: float, m_max: int = 10**7) -> int:
    # eps_m is only meaningful once the angle bigL kappa / m is at most pi
    m = max(1, math.ceil(bigL * kappa / math.pi))
    while net_condition(m, mu, bigL, kappa, d0) >= eps:
        m += 1
        if m > m_max:
            raise ValueError("no admissible m below the search cap")
    return m


def build_net(A: BoundaryArcSet, D: ConvexBody, Dp: ConvexBody, eps: float,
              kappa: float | None = None, d0: float | None = None) -> TangentNet:
    """Net of radius eps_m < eps with m equally spaced skeleton points per arc."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if A.mu == 0:
        raise ValueError("empty arc set")
    A.check_on(D)
    kappa = D.kappa_max() if kappa is None else kappa
    d0 = dist_pair(D, Dp) if d0 is None else d0
    bigL = A.bigL
    m = smallest_m(A.mu, bigL, kappa, d0, eps)
    pts = []
    for i in range(A.mu):
        ell = A.lengths[i]
        k = np.arange(m)
        s = k * ell / m if A.closed[i] else (k + 0.5) * ell / m
        raw = to_real(A.at_length(i, s))
        pts.append(from_real(D._closest(raw)))
    return TangentNet(D, np.vstack(pts), eps_m(bigL, kappa, m), None, m, A.mu, bigL, kappa, d0, eps)


def covers(net: TangentNet, A: BoundaryArcSet, check_body: ConvexBody | None = None) -> bool:
    """Every arc sample lies in a slab whose base is within L/m of it.

    Chord length stands in for intrinsic distance on Fr D; chords are never
    longer, so the base condition is a slight relaxation.
    """
    if check_body is not None and check_body is not net.body:
        raise ValueError("net was built over a different body")
    if A.mu == 0:
        return True
    A.check_on(net.body)
    q = to_real(A.samples())
    off = net.slab_offsets(q)
    inside = off < net.radius
    if net.m is not None:
        chord = np.linalg.norm(q[:, None, :] - to_real(net.skeleton)[None], axis=-1)
        inside &= chord <= net.bigL / net.m
    return bool(np.all(inside.any(axis=1)))


def collinear_measure(n1, n2) -> float:
    """|det [n1 n2]| for unit complex normals; zero iff complex collinear."""
    return float(abs(n1[0] * n2[1] - n1[1] * n2[0]))


def generic_position(net: TangentNet, tol: float = 1e-6, steps: int = 40) -> TangentNet:
    """Nudge skeleton points along Fr D until no two normals are complex collinear."""
    if len(net) == 0:
        raise ValueError("empty skeleton")
    D = net.body
    sk = net.skeleton.copy()
    nu = net.normals.copy()
    diam = D.diameter()

    def bad_partner(i):
        for j in range(len(sk)):
            if j != i and collinear_measure(nu[i], nu[j]) <= tol:
                return j
        return None

    for i in range(len(sk)):
        if bad_partner(i) is None:
            continue
        # real tangent direction outside span_C(nu): moving along J nu keeps the complex line
        t = complex_orthogonal(nu[i]).u
        for s in diam * 1e-6 * 2.0 ** np.arange(steps):
            cand = from_real(D._closest(to_real(sk[i] + s * t)[None]))[0]
            ncand = D.outward_normal(cand, tol=ON_BOUNDARY_TOL)
            old = sk[i], nu[i]
            sk[i], nu[i] = cand, ncand
            if bad_partner(i) is None:
                break
            sk[i], nu[i] = old
        else:
            raise ValueError("degenerate skeleton")
    if np.array_equal(sk, net.skeleton):
        return net
    return net.with_skeleton(sk)


def _sign_fix(v: np.ndarray) -> np.ndarray:
    x = to_real(v)
    k = int(np.argmax(np.abs(x) > 1e-9))
    return -v if x[k] < 0 else v


def common_tangent_direction(D: ConvexBody, p1, p2, tol: float = 1e-9) -> np.ndarray:
    """Unit v tangent to Fr D at p1 and p2, off both complex complements.

    Among the real 2-plane T_{p1} cap T_{p2} the maximizer of
    min_k |<<v, nu_k>>| is returned, with the first nonzero real coordinate positive.
    """
    n1 = D.outward_normal(p1, tol=ON_BOUNDARY_TOL)
    n2 = D.outward_normal(p2, tol=ON_BOUNDARY_TOL)
    if np.linalg.norm(n1 - n2) < tol:
        return _sign_fix(1j * n1)
    if collinear_measure(n1, n2) < tol:
        raise ValueError("degenerate pair: complex collinear normals")
    _, _, vt = np.linalg.svd(np.stack([to_real(n1), to_real(n2)]))
    B = vt[2:]

    def score(a):
        v = from_real(math.cos(a) * B[0] + math.sin(a) * B[1])
        return min(abs(hermitian(v, n1)), abs(hermitian(v, n2)))

    grid = np.linspace(0, math.pi, 721)[:-1]
    vals = np.array([score(a) for a in grid])
    h = grid[1] - grid[0]
    peaks = [k for k in range(len(grid)) if vals[k] >= vals[k - 1] and vals[k] >= vals[(k + 1) % len(grid)]]
    cands = []
    for k in peaks:
        res = minimize_scalar(lambda a: -score(a), bounds=(grid[k] - h, grid[k] + h), method="bounded",
                              options={"xatol": 1e-12})
        a = res.x if -res.fun >= vals[k] else grid[k]
        v = from_real(math.cos(a) * B[0] + math.sin(a) * B[1])
        cands.append((score(a), _sign_fix(v / np.linalg.norm(to_real(v)))))
    best = max(c[0] for c in cands)
    # ties (symmetric configurations) go to the lexicographically largest real vector
    tied = [tuple(to_real(v)) for s, v in cands if s >= best - 1e-9]
    return from_real(np.array(max(tied, key=lambda t: tuple(np.round(t, 9)))))


# --- the length bound ---------------------------------------------------------------------


def f_profile(t, kappa: float):
    """(t^2 kappa - t) / sqrt(t^2 kappa^2 - 1), increasing for t > 1/kappa."""
    t = np.asarray(t, dtype=float)
    return (t**2 * kappa - t) / np.sqrt(t**2 * kappa**2 - 1)


def analytic_lower_bound(net: TangentNet, D: ConvexBody, Dp: ConvexBody) -> float:
    """dee(D, Dp) - 4 (m mu + 1) eps_m / sqrt((d0 kappa + 1)^2 - 1)."""
    if net.m is None or net.mu is None:
        raise ValueError("net carries no builder data (m, mu)")
    pm = dee(D, Dp)
    G = 4 * (net.m * net.mu + 1) * net.radius / math.sqrt((pm.dist * pm.kappa + 1) ** 2 - 1)
    return pm.dee - G


# --- the shortest path oracle -------------------------------------------------------------


@dataclass
class OracleResult:
    reachable: bool
    min_length: float
    slack: float
    max_edge: float
    nodes: int
    edges: int
    source: int | None = None
    path: list = field(default_factory=list)
    crossings: int = 0

    def to_dict(self):
        return {"reachable": self.reachable, "min_length": self.min_length, "slack": self.slack,
                "max_edge": self.max_edge, "nodes": self.nodes, "edges": self.edges,
                "source": self.source, "crossings": self.crossings}


def _sphere2(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    r = np.sqrt(1 - z * z)
    a = math.pi * (3 - math.sqrt(5)) * k
    return np.stack([r * np.cos(a), r * np.sin(a), z], axis=1)


def _exit_distance(Dp: ConvexBody, x: np.ndarray, basis: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Distance inside the hyperplane spanned by basis from x to Fr Dp."""
    if isinstance(Dp, Ball):
        return _ball_section_exit(Dp, x, basis)
    U = dirs @ basis
    t = Dp.ray_exit(x[:, None, :], U[None, :, :])
    return t.min(axis=1)


def _ball_section_exit(Dp: Ball, x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    # the section of a ball by a hyperplane is a ball about the projected center
    n = _normal_of(basis)
    h = (Dp.center - x[0]) @ n
    rho2 = Dp.radius**2 - h**2
    cproj = Dp.center - h * n
    return np.sqrt(max(rho2, 0.0)) - np.linalg.norm(x - cproj, axis=1)


def _normal_of(basis: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(basis, full_matrices=True)
    return vt[-1]


def min_path_length(net: TangentNet, D: ConvexBody, Dp: ConvexBody, resolution: float = 0.2,
                    neighbors: int = 2, near: int = 16, exit_dirs: int = 400) -> OracleResult:
    """Shortest path through the net from Fr D to Fr D', on a visibility graph.

    Each slab is replaced by its tangent hyperplane H_k. H_k meets the closed
    body D only at p_k, and H_k cap D' is convex, so any two points of it are
    joined by a straight segment inside the net. Nodes are the tangency
    points (sources) and grid samples, at spacing `resolution`, of the seams
    H_k cap H_l cap D' between each slab and its `neighbors` nearest skeleton
    neighbours. Inside a slab every node is joined to its `near` nearest
    nodes in each other group; each node reaches a common sink at its
    in-hyperplane distance to Fr D'.

    The returned length bounds the true infimum over these switching
    patterns from above. `slack` bounds the excess from where the graph
    forces crossings and exits: sqrt(2) resolution per seam crossing plus the
    direction sampling error of the exit distance (zero for a ball D').
    """
    k = len(net)
    if k == 0:
        return OracleResult(False, math.inf, 0.0, 0.0, 0, 0)
    P = to_real(net.skeleton)
    N = to_real(net.normals)
    bases = [_tangent_basis(n) for n in N]
    R = Dp.diameter()
    dirs = _sphere2(exit_dirs)

    groups = {s: [np.arange(1) + s] for s in range(k)}  # slab -> list of node index arrays
    coords = [P]
    n_nodes = k
    if k > 1:
        tree = cKDTree(P)
        _, nb = tree.query(P, k=min(neighbors + 1, k))
        pairs = {(min(i, j), max(i, j)) for i in range(k) for j in np.atleast_1d(nb[i])[1:]}
        h = resolution
        g = np.arange(-R, R + h / 2, h)
        ga, gb = np.meshgrid(g, g)
        grid2 = np.stack([ga.ravel(), gb.ravel()], axis=1)
        for i, j in sorted(pairs):
            A2 = np.stack([N[i], N[j]])
            if np.linalg.matrix_rank(A2, tol=1e-10) < 2:
                continue
            rhs = np.array([N[i] @ P[i], N[j] @ P[j]])
            x0 = np.linalg.lstsq(A2, rhs, rcond=None)[0]
            E = np.linalg.svd(A2)[2][2:]
            xc = x0 + E.T @ (E @ (Dp.center - x0))
            pts = xc + grid2 @ E
            pts = pts[Dp._gauge(pts) <= 1]
            if len(pts) == 0:
                continue
            idx = np.arange(n_nodes, n_nodes + len(pts))
            n_nodes += len(pts)
            coords.append(pts)
            groups[i].append(idx)
            groups[j].append(idx)
    X = np.vstack(coords)
    sink = n_nodes

    rows, cols, wts = [], [], []
    exit_w = np.full(n_nodes, np.inf)
    for s in range(k):
        gs = groups[s]
        allidx = np.concatenate(gs)
        ex = _exit_distance(Dp, X[allidx], bases[s], dirs)
        exit_w[allidx] = np.minimum(exit_w[allidx], np.maximum(ex, 0.0))
        for a in range(len(gs)):
            for b in range(a + 1, len(gs)):
                src, dst = gs[a], gs[b]
                q = min(near, len(dst))
                d, nn = cKDTree(X[dst]).query(X[src], k=q)
                d = np.atleast_2d(d.reshape(len(src), q))
                nn = np.atleast_2d(nn.reshape(len(src), q))
                rows.append(np.repeat(src, q))
                cols.append(dst[nn.ravel()])
                wts.append(d.ravel())
    rows.append(np.arange(n_nodes))
    cols.append(np.full(n_nodes, sink))
    wts.append(exit_w)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    w = np.concatenate(wts)
    keep = np.isfinite(w)
    r, c, w = r[keep], c[keep], w[keep]
    # zero weights would vanish from the sparse matrix
    w = np.maximum(w, 1e-300)
    G = coo_matrix((w, (r, c)), shape=(n_nodes + 1, n_nodes + 1)).tocsr()
    dist, pred = dijkstra(G, directed=False, indices=sink, return_predecessors=True)
    ds = dist[:k]
    best = int(np.argmin(ds))
    if not np.isfinite(ds[best]):
        return OracleResult(False, math.inf, 0.0, float(w.max(initial=0)), n_nodes + 1, len(w))
    path = [best]
    while path[-1] != sink:
        path.append(int(pred[path[-1]]))
    crossings = len(path) - 2
    if isinstance(Dp, Ball):
        exit_slack = 0.0
    else:
        cover = 2.2 * math.sqrt(4 * math.pi / exit_dirs)  # generous covering angle of the direction set
        exit_slack = R * (1 / math.cos(cover) - 1)
    slack = math.sqrt(2) * resolution * crossings + exit_slack
    return OracleResult(True, float(ds[best]), slack, float(w[c != sink].max(initial=0)), n_nodes + 1, len(w),
                        best, path[:-1], crossings)
