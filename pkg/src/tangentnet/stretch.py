"""Stretching a disc-parametrized curve from near Fr D out to Fr D' inside a tangent net.

The parameter disc |z| <= r_in is extended to |z| <= r_out. Radial spokes at
the junctions Q_j of the boundary arcs carry ramps along common tangent
directions of neighbouring slabs; the sectors between consecutive spokes are
then pushed, one at a time, off D' in the complex direction orthogonal to
the slab normal. The final curve is cut down to the component of
Y^{-1}(D') containing the inner disc.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .approx import Compact, CompactaSet, Piece, RadialArc, mergelyan_extend, monomial_coefficients, runge_fit
from .convex import ConvexBody
from .curve import AnalyticMap, BoundaryPartition, Domain, split_boundary
from .geometry import CMP_TOL, ComplexFrame, complex_orthogonal, hermitian, norm, to_real
from .net import TangentNet, common_tangent_direction, generic_position

PROPERTY_TAGS = ("1_n", "2_n", "3_n", "4_n", "5_n", "6_n")
CONCLUSION_TAGS = ("a", "b", "c", "d", "e")
COEF_TOL = 1e-12


class StretchError(ValueError):
    """Failure of one stage or verified property; `tag` names it."""

    def __init__(self, tag: str, msg: str):
        super().__init__(f"[{tag}] {msg}")
        self.tag = tag


# --- the push constant ------------------------------------------------------------------


def _line_samples(zeta, u, w, Dp: ConvexBody, n: int = 1000):
    """About n points of zeta u + span_C(w), on a polar grid centred at the point nearest Dp's center."""
    c = Dp.center[0::2] + 1j * Dp.center[1::2]
    lam0 = hermitian(c, w)
    rad = Dp.diameter()
    nrad = 24
    per = max(8, (n - 1) // nrad)
    rho = np.repeat(np.linspace(rad / nrad, rad, nrad), per)
    th = np.tile(2 * np.pi * np.arange(per) / per, nrad)
    lam = np.concatenate([[lam0], lam0 + rho * np.exp(1j * th)])
    return zeta * u[None, :] + lam[:, None] * w[None, :]


def _projection_support(u, Dp: ConvexBody, phase: float) -> float:
    """max over Dp of Re(e^{-i phase} <<x, u>>), the support of the projected body."""
    return float(Dp.support(to_real(np.exp(1j * phase) * u)))


def choose_zeta(u, w, Dp: ConvexBody, margin: float, phase: float | None = None) -> complex:
    """Constant zeta with (zeta u + span_C(w)) disjoint from the closure of Dp.

    With a phase, zeta = (h + margin) e^{i phase}, h the support of the
    projection x -> <<x, u>> of Dp in that direction. Without one, |zeta| is
    the radius of the smallest origin-centred disc holding the projection
    plus margin, which works for every phase; zeta is then real.
    Non-intersection is verified on 10^3 samples of the line; one failure
    bumps |zeta| slightly and retries, a second raises.
    """
    u = np.asarray(u, complex)
    w = np.asarray(w, complex)
    if not ComplexFrame(u, w).check(1e-9):
        raise ValueError("(u, w) is not a complex frame")
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    if phase is None:
        grid = np.linspace(0, 2 * np.pi, 721)[:-1]
        h = max(_projection_support(u, Dp, t) for t in grid)
        # the support of a disc-like projection varies smoothly; pad by the grid error
        h += Dp.diameter() * (1 - math.cos(grid[1] / 2))
        direction = 1.0 + 0j
    else:
        h = _projection_support(u, Dp, phase)
        direction = np.exp(1j * phase)
    t = max(h, 0.0) + margin
    bump = 1e-6 * max(1.0, Dp.diameter())
    for attempt in range(2):
        zeta = t * direction
        g = Dp.gauge(_line_samples(zeta, u, w, Dp))
        if g.min() > 1 + CMP_TOL:
            return complex(zeta)
        t += bump
    raise ValueError(f"line still meets the body (min gauge {g.min():.6g})")


# --- polar grid helpers -------------------------------------------------------------------


@dataclass
class PolarGrid:
    """Tensor grid theta x r on the disc |z| <= r[-1]; r[0] = 0 joins every ray at the center."""

    r: np.ndarray
    theta: np.ndarray

    @classmethod
    def make(cls, outer: float, resolution) -> "PolarGrid":
        if np.isscalar(resolution):
            h = float(resolution)
            if not h > 0:
                raise ValueError("resolution must be positive")
            nr = int(math.ceil(outer / h)) + 1
            nt = int(math.ceil(2 * np.pi * outer / h))
        else:
            nr, nt = (int(v) for v in resolution)
        if nr < 3 or nt < 8:
            raise ValueError("grid too coarse")
        return cls(np.linspace(0, outer, nr), 2 * np.pi * np.arange(nt) / nt)

    @property
    def z(self) -> np.ndarray:
        return self.r[None, :] * np.exp(1j * self.theta)[:, None]

    @property
    def cell_area(self) -> np.ndarray:
        dr = np.gradient(self.r)
        rr = np.maximum(self.r, dr / 4)
        return np.broadcast_to(rr * dr * (2 * np.pi / len(self.theta)), (len(self.theta), len(self.r)))

    def label(self, mask: np.ndarray):
        """Connected components of mask with theta periodic and the r = 0 column joined."""
        lab, n = ndimage.label(mask)
        if n == 0:
            return lab, 0
        a, b = [], []
        both = (lab[0] > 0) & (lab[-1] > 0)
        a.extend(lab[0][both])
        b.extend(lab[-1][both])
        col = lab[:, 0][lab[:, 0] > 0]
        if len(col) > 1:
            a.extend(col[:-1])
            b.extend(col[1:])
        g = coo_matrix((np.ones(len(a)), (np.asarray(a, int), np.asarray(b, int))), shape=(n + 1, n + 1))
        k, comp = connected_components(g, directed=False)
        out = np.where(lab > 0, comp[lab] + 1, 0)
        uniq = np.unique(out[out > 0])
        remap = np.zeros(out.max() + 1, int)
        remap[uniq] = np.arange(1, len(uniq) + 1)
        return remap[out], len(uniq)


@dataclass
class TrimmedRegion:
    """Grid model of the component of Y^{-1}(D') containing the inner disc."""

    grid: PolarGrid
    mask: np.ndarray
    inner: float
    boundary: np.ndarray  # parameters on Y^{-1}(Fr D') found by bisection
    boundary_gauge_error: float
    open_cells: int  # region cells on the outer circle of the grid

    @property
    def area(self) -> float:
        return float(self.grid.cell_area[self.mask].sum())

    def samples(self) -> np.ndarray:
        return self.grid.z[self.mask]

    def annulus_samples(self) -> np.ndarray:
        z = self.grid.z
        return z[self.mask & (np.abs(z) > self.inner)]

    def topology(self) -> dict:
        """Component and hole counts; the added region is an annulus iff both are one."""
        _, ncomp = self.grid.label(self.mask)
        lab, nout = self.grid.label(~self.mask)
        outer_labels = set(np.unique(lab[:, -1])) - {0}
        holes = nout - len(outer_labels)
        added = self.mask & (self.grid.r[None, :] > self.inner)
        _, nadd = self.grid.label(added)
        # a connected planar region has Euler characteristic 1 - holes; the inner disc is one more hole
        return {"components": int(ncomp), "holes": int(holes), "added_components": int(nadd),
                "euler_added": int(-holes) if nadd == 1 else None}


def trim_to_component(Y: AnalyticMap, Dp: ConvexBody, resolution=(240, 1200), inner: float = 0.0,
                      values: np.ndarray | None = None, bisect: int = 40) -> TrimmedRegion:
    """Flood fill of {gauge_Dp(Y(z)) < 1} from the inner disc on a polar grid of Y's domain."""
    grid = PolarGrid.make(Y.domain.outer, resolution)
    z = grid.z
    g = Dp.gauge(Y(z) if values is None else values)
    inside = g < 1
    core = grid.r[None, :] <= inner
    core = np.broadcast_to(core, inside.shape)
    if not np.all(inside[core]):
        raise ValueError("inner disc not inside the body")
    lab, _ = grid.label(inside)
    keep = lab[0, 0]
    mask = lab == keep
    # boundary pairs: region cell next to a non-region cell, radially or angularly
    pa, pb = [], []
    rad = mask[:, :-1] & ~mask[:, 1:]
    pa.append(z[:, :-1][rad]), pb.append(z[:, 1:][rad])
    rad = ~mask[:, :-1] & mask[:, 1:]
    pa.append(z[:, 1:][rad]), pb.append(z[:, :-1][rad])
    nxt = np.roll(mask, -1, axis=0)
    zn = np.roll(z, -1, axis=0)
    ang = mask & ~nxt
    pa.append(z[ang]), pb.append(zn[ang])
    ang = ~mask & nxt
    pa.append(zn[ang]), pb.append(z[ang])
    a, b = np.concatenate(pa), np.concatenate(pb)
    if len(a):
        for _ in range(bisect):
            m = 0.5 * (a + b)
            ins = Dp.gauge(Y(m)) < 1
            a = np.where(ins, m, a)
            b = np.where(ins, b, m)
        bnd = 0.5 * (a + b)
        err = float(np.abs(Dp.gauge(Y(bnd)) - 1).max())
    else:
        bnd, err = np.zeros(0, complex), 0.0
    return TrimmedRegion(grid, mask, inner, bnd, err, int(mask[:, -1].sum()))


# --- state --------------------------------------------------------------------------------------


@dataclass
class Sector:
    """Piece A_j of the added annulus between the spokes at angles a0 < a1."""

    j: int
    a0: float
    a1: float
    p: np.ndarray
    nu: np.ndarray
    frame: ComplexFrame
    k_center: complex = 0j
    k_radius: float = 0.0
    zeta: complex | None = None

    def holds(self, z, inner: float) -> np.ndarray:
        t = np.mod(np.angle(z) - self.a0, 2 * np.pi)
        return (t <= self.a1 - self.a0 + 1e-12) & (np.abs(z) >= inner - 1e-12)

    def in_k(self, z) -> np.ndarray:
        return np.abs(z - self.k_center) <= self.k_radius

    def k_samples(self, n: int = 400) -> np.ndarray:
        rings = [self.k_center]
        for f in (0.25, 0.5, 0.75, 1.0):
            m = max(16, int(n * f / 2.5))
            rings.extend(self.k_center + f * self.k_radius * np.exp(2j * np.pi * np.arange(m) / m))
        return np.asarray(rings)

    def to_dict(self):
        return {"j": self.j, "a0": self.a0, "a1": self.a1, "k_center": [self.k_center.real, self.k_center.imag],
                "k_radius": self.k_radius,
                "zeta": None if self.zeta is None else [self.zeta.real, self.zeta.imag]}


@dataclass
class StretchState:
    Y: AnalyticMap
    X: AnalyticMap
    D: ConvexBody
    Dp: ConvexBody
    net: TangentNet
    delta: float
    sectors: list
    inner: float
    outer: float
    grid: PolarGrid
    n: int = 0
    consumed: float = 0.0
    checks: dict = field(default_factory=lambda: {t: [] for t in PROPERTY_TAGS})
    deriv_weight: float = 0.3
    zeta_margin: float | None = None
    enforce: tuple = PROPERTY_TAGS

    @property
    def steps(self) -> int:
        return len(self.sectors)

    @property
    def step_budget(self) -> float:
        return self.delta / (1 + self.steps)

    @property
    def betas(self) -> list:
        """Outer boundary arcs as angle intervals, one per sector."""
        return [(s.a0, s.a1) for s in self.sectors]


def _record(state: StretchState, tag: str, n: int, value: float, ok: bool, witness=None, **extra):
    item = {"n": n, "value": float(value), "ok": bool(ok), **extra}
    if witness is not None:
        item["witness"] = [float(np.real(witness)), float(np.imag(witness))]
    state.checks[tag].append(item)
    if not ok and tag in state.enforce:
        raise StretchError(tag, f"step {n}: value {value:.4g} at z = {complex(witness) if witness is not None else None}")


def _complement_boundary(sec: Sector, inner: float, outer: float, n: int = 500, n_out: int = 3000) -> np.ndarray:
    """Closed polygon bounding the disc together with every sector except `sec`."""
    a0, a1 = sec.a0, sec.a1
    arc = inner * np.exp(1j * np.linspace(a0, a1, n))
    rs = np.linspace(inner, outer, n)
    up = rs[1:] * np.exp(1j * a1)
    out = outer * np.exp(1j * np.linspace(a1, a0 + 2 * np.pi, n_out))[1:]
    down = rs[::-1][1:-1] * np.exp(1j * a0)
    return np.concatenate([arc, up, out, down])


def _check_state(state: StretchState, n: int, Yg: np.ndarray) -> None:
    """Properties (3_n)-(6_n) on the verification grid."""
    z = state.grid.z
    Dp, D = state.Dp, state.D
    gp = Dp.gauge(Yg)
    eps = state.net.radius
    # (3_n) inside the closure of D', sector pieces off K stay in their own slab
    worst, wz = -np.inf, None
    for s in state.sectors:
        sel = s.holds(z, state.inner) & ~s.in_k(z) & (gp <= 1)
        if not np.any(sel):
            continue
        off = np.abs(np.real(hermitian(Yg[sel] - s.p, s.nu))) - eps
        k = int(np.argmax(off))
        if off[k] > worst:
            worst, wz = off[k], z[sel][k]
    _record(state, "3_n", n, worst, worst < 0, wz)
    # (4_n) outer arcs off K miss the closure of D'; the projection gap onto span_R(J nu) is kept for reference
    zb = z[:, -1]
    Yb = Yg[:, -1]
    worst, wz, proj = np.inf, None, np.inf
    for s in state.sectors:
        sel = s.holds(zb, state.inner) & ~s.in_k(zb)
        if not np.any(sel):
            continue
        g = Dp.gauge(Yb[sel]) - 1
        k = int(np.argmin(g))
        if g[k] < worst:
            worst, wz = g[k], zb[sel][k]
        jn = 1j * s.nu
        t = np.real(hermitian(Yb[sel], jn))
        gap = np.maximum(t - float(Dp.support(to_real(jn))), -float(Dp.support(to_real(-jn))) - t)
        proj = min(proj, float(gap.min()))
    _record(state, "4_n", n, worst, worst > CMP_TOL, wz, projection_gap=proj)
    # (5_n) processed discs K are mapped off the closure of D'
    worst, wz = np.inf, None
    for s in state.sectors[:n]:
        zk = s.k_samples()
        g = Dp.gauge(state.Y(zk)) - 1
        k = int(np.argmin(g))
        if g[k] < worst:
            worst, wz = g[k], zk[k]
    if n > 0:
        _record(state, "5_n", n, worst, worst > CMP_TOL, wz)
    # (6_n) the inner disc stays in D_delta
    core = np.broadcast_to(state.grid.r[None, :] <= state.inner, z.shape)
    sd = D.signed_distance(Yg[core]) - state.delta
    k = int(np.argmax(sd))
    _record(state, "6_n", n, sd[k], sd[k] < 0, z[core][k])


def stretch_step(state: StretchState, n: int, degree: int) -> StretchState:
    """Replace the u-component of Y on sector n so that its disc K leaves D'.

    phi is a Runge fit of the piecewise target (<<Y, u>> in C^1 on the
    complement compactum, zeta on K); only the correction phi - <<Y, u>>
    is fitted, and Y_n = Y_{n-1} + (phi - <<Y_{n-1}, u>>) u, which equals
    phi u + <<Y_{n-1}, w>> w and leaves the w-component untouched.
    """
    if not 1 <= n <= state.steps:
        raise ValueError(f"step {n} out of range 1..{state.steps}")
    if n != state.n + 1:
        raise ValueError(f"state is at step {state.n}, cannot run step {n}")
    s = state.sectors[n - 1]
    u, w = s.frame.u, s.frame.w
    Y = state.Y
    margin = state.zeta_margin if state.zeta_margin is not None else 0.1 * state.Dp.diameter() / 2
    aK = complex(hermitian(Y(np.array([s.k_center]))[0], u))
    s.zeta = choose_zeta(u, w, state.Dp, margin, phase=float(np.angle(aK)))
    E = _complement_boundary(s, state.inner, state.outer)
    Kb = s.k_center + s.k_radius * np.exp(2j * np.pi * np.arange(400) / 400)

    def gap(zz):
        return s.zeta - hermitian(Y(zz), u)

    spec = CompactaSet([Compact(E, True, "complement"), Compact(Kb, True, "K")], connected_complement=True)
    pieces = [Piece(0j, norm="C1", deriv_weight=state.deriv_weight), Piece(gap, norm="C0")]
    try:
        psi, rep = runge_fit(spec, pieces, degree)
    except ValueError as exc:
        raise StretchError("runge", f"step {n}: {exc}") from exc
    pc = monomial_coefficients(psi, state.outer, degree + 1, nfft=max(4096, 4 * (degree + 1)))
    m = max(len(Y.coeffs), len(pc))
    C = np.zeros((m, 2), complex)
    C[: len(Y.coeffs)] = Y.coeffs
    C[: len(pc)] += np.outer(pc, u)
    try:
        Yn = AnalyticMap(C, Y.domain)
    except ValueError as exc:
        raise StretchError("immersion", f"step {n}: {exc}") from exc
    # (1_n) C^1 closeness on the complement compactum
    d0 = norm(Yn(E) - Y(E))
    d1 = norm(Yn.deriv(E) - Y.deriv(E))
    k = int(np.argmax(np.maximum(d0, d1)))
    c1 = float(max(d0.max(), d1.max()))
    state.Y = Yn
    state.n = n
    _record(state, "1_n", n, c1, c1 < state.step_budget, E[k])
    state.consumed += c1
    # (2_n) the w-components agree coefficient by coefficient
    Cold = np.zeros_like(C)
    Cold[: len(Y.coeffs)] = Y.coeffs
    dw = np.abs((C - Cold) @ np.conj(w))
    _record(state, "2_n", n, dw.max(), dw.max() < COEF_TOL)
    _check_state(state, n, Yn(state.grid.z))
    return state


# --- the seed: ramps along the spokes ---------------------------------------------------------


class _RampSeed:
    """X + sum_j c_j B_j(z) v_j with B_j real increasing on spoke j, 1 at its outer end."""

    def __init__(self, X: AnalyticMap, Q, c, V, outer: float, powers=(40, 20)):
        self.X, self.Q, self.c, self.V = X, np.asarray(Q), np.asarray(c), np.asarray(V)
        self.N, self.M = powers
        self.ratio = outer / abs(self.Q[0])
        self.ncoef = len(X.coeffs) + self.N + self.M + 1

    def ramp(self, z, j):
        s = np.asarray(z, complex) / self.Q[j]
        R = self.ratio
        return s**self.N * ((s + 1) / 2) ** self.M / (R**self.N * ((R + 1) / 2) ** self.M)

    def ramp_deriv(self, z, j):
        s = np.asarray(z, complex) / self.Q[j]
        R = self.ratio
        N, M = self.N, self.M
        d = (N * s ** (N - 1) * ((s + 1) / 2) ** M + s**N * (M / 2) * ((s + 1) / 2) ** (M - 1))
        return d / (R**N * ((R + 1) / 2) ** M) / self.Q[j]

    def __call__(self, z):
        out = self.X(z)
        for j in range(len(self.Q)):
            out = out + (self.c[j] * self.ramp(z, j))[..., None] * self.V[j]
        return out

    def deriv(self, z):
        out = self.X.deriv(z)
        for j in range(len(self.Q)):
            out = out + (self.c[j] * self.ramp_deriv(z, j))[..., None] * self.V[j]
        return out


def _pick_k(Y: AnalyticMap, s: Sector, Dp: ConvexBody, inner: float, outer: float, radius: float,
            margin: float, gauge_min: float = 1.15) -> complex:
    """Centre of K on the sector's mid ray: the first radius where Y already sits well outside Dp."""
    tm = 0.5 * (s.a0 + s.a1)
    r = np.linspace(inner + 2 * radius, outer - 2 * radius, 600)
    ray = r * np.exp(1j * tm)
    Yr = Y(ray)
    a = hermitian(Yr, s.frame.u)
    need = np.array([abs(choose_zeta(s.frame.u, s.frame.w, Dp, margin, float(np.angle(x)))) for x in a[::30]])
    need = np.interp(np.arange(len(r)), np.arange(len(r))[::30], need)
    ok = (np.abs(a) > need) & (Dp.gauge(Yr) > gauge_min)
    return complex(ray[int(np.argmax(ok))] if np.any(ok) else ray[-1])


def prepare(X: AnalyticMap, D: ConvexBody, Dp: ConvexBody, net: TangentNet, delta: float,
            outer_ratio: float = 1.6, powers=(40, 20), k_radius: float = 0.015, merge_degree: int = 60,
            resolution=(240, 1200)) -> tuple[StretchState, dict]:
    """Boundary split, spoke arcs, Mergelyan extension and K discs: the state before step 1."""
    if not X.domain.is_disc:
        raise StretchError("precondition", "only disc parameter domains are supported")
    if not delta < net.radius:
        raise StretchError("precondition", f"delta {delta} must be below the net radius {net.radius}")
    inner = X.domain.outer
    zb = inner * np.exp(2j * np.pi * np.arange(2048) / 2048)
    Yb = X(zb)
    if not (np.all(net.contains(Yb)) and np.all(D.signed_distance(Yb) < delta)):
        raise StretchError("precondition", "X(bR) is not inside the net and D_delta")
    try:
        net = generic_position(net)
        part: BoundaryPartition = split_boundary(X, net, D, delta)
    except ValueError as exc:
        raise StretchError("split", str(exc)) from exc
    J = part.J[0]
    st = np.asarray(part.starts[0])
    thQ = part.junctions(0)
    P = [net.skeleton[i] for i in part.assigned[0]]
    NU = [D.outward_normal(p, tol=1e-6) for p in P]
    diam_p = Dp.diameter()
    V, c = [], []
    for j in range(J):
        k = (j + 1) % J
        try:
            v = common_tangent_direction(D, P[j], P[k])
        except ValueError as exc:
            raise StretchError("arcs", f"junction {j}: {exc}") from exc
        if np.imag(hermitian(v, NU[j])) < 0:
            v = -v
        mu = min(abs(hermitian(v, NU[j])), abs(hermitian(v, NU[k])))
        V.append(v)
        c.append(1.1 * (1 + diam_p) / mu)
    outer = outer_ratio * inner
    Q = inner * np.exp(1j * thQ)
    seed = _RampSeed(X, Q, c, V, outer, powers)
    arcs = []
    for j in range(J):
        def target(r, j=j):
            zz = np.asarray(r) * np.exp(1j * thQ[j])
            return X(zz) + (c[j] * seed.ramp(zz, j))[:, None] * V[j]
        arcs.append(RadialArc(float(thQ[j]), inner, outer, target))
    budget = delta / (1 + J)
    try:
        Y0, mrep = mergelyan_extend(X, arcs, outer, budget, merge_degree, seed=seed, seed_deriv=seed.deriv)
    except ValueError as exc:
        raise StretchError("mergelyan", str(exc)) from exc
    if mrep.exceeded:
        raise StretchError("mergelyan", f"C1 error {mrep.c1_inner:.3g} on the inner disc exceeds {budget:.3g}")
    # endpoints of the arcs clear D' in every relevant J nu projection
    reach = []
    for j in range(J):
        o = Y0(np.array([outer * np.exp(1j * thQ[j])]))[0] - Y0(np.array([Q[j]]))[0]
        for k in (j, (j + 1) % J):
            reach.append(abs(np.real(hermitian(o, 1j * NU[k]))))
    if min(reach) <= 1 + diam_p:
        raise StretchError("arcs", f"arc reach {min(reach):.4g} does not exceed 1 + diam(D') = {1 + diam_p:.4g}")
    sectors = []
    for j in range(J):
        a0 = float(st[j])
        sectors.append(Sector(j, a0, a0 + 2 * np.pi / J, P[j], NU[j], complex_orthogonal(NU[j])))
    grid = PolarGrid.make(outer, resolution)
    state = StretchState(Y0, X, D, Dp, net, delta, sectors, inner, outer, grid)
    margin = 0.1 * diam_p / 2
    state.zeta_margin = margin
    for s in sectors:
        s.k_radius = k_radius
        s.k_center = _pick_k(Y0, s, Dp, inner, outer, k_radius, margin)
    info = {"J": J, "I": 1, "junctions": thQ.tolist(), "c": [float(x) for x in c],
            "mergelyan": mrep.to_dict(), "arc_reach": float(min(reach)), "outer": outer}
    _check_state(state, 0, Y0(grid.z))
    return state, info


def run_lemma_main(X: AnalyticMap, D: ConvexBody, Dp: ConvexBody, net: TangentNet, delta: float,
                   degree: int = 300, resolution=(240, 1200), **kw):
    """Full stretch: returns (trimmed region, final map on the extended disc, report dict)."""
    state, info = prepare(X, D, Dp, net, delta, resolution=resolution, **kw)
    for n in range(1, state.steps + 1):
        stretch_step(state, n, degree)
    Y = state.Y
    Yg = Y(state.grid.z)
    try:
        region = trim_to_component(Y, Dp, resolution, inner=state.inner, values=Yg)
    except ValueError as exc:
        raise StretchError("trim", str(exc)) from exc
    report = {"params": {"delta": delta, "degree": degree, "eps": state.net.radius, **info},
              "sectors": [s.to_dict() for s in state.sectors],
              **{t: state.checks[t] for t in PROPERTY_TAGS}}
    report.update(_conclusions(state, region))
    report["budget"] = {"per_step": state.step_budget, "consumed": state.consumed,
                        "mergelyan": info["mergelyan"]["c1_inner"],
                        "ok": bool(state.consumed + info["mergelyan"]["c1_inner"] < delta)}
    return region, Y, report


def _conclusions(state: StretchState, region: TrimmedRegion) -> dict:
    Y, X = state.Y, state.X
    out = {}
    topo = region.topology()
    out["a"] = {"ok": topo["components"] == 1 and topo["holes"] == 0 and topo["added_components"] == 1
                and region.open_cells == 0, **topo}
    zc = state.inner * np.exp(2j * np.pi * np.arange(4096) / 4096)
    e0 = norm(Y(zc) - X(zc))
    e1 = norm(Y.deriv(zc) - X.deriv(zc))
    v = float(max(e0.max(), e1.max()))
    out["b"] = {"ok": v < state.delta, "value": v}
    za = region.annulus_samples()
    Ya = Y(za)
    sd = state.D.signed_distance(Ya) + state.net.radius
    k = int(np.argmin(sd)) if len(sd) else 0
    out["c"] = {"ok": bool(len(sd) == 0 or sd.min() > 0), "value": float(sd.min()) if len(sd) else None,
                "witness": [za[k].real, za[k].imag] if len(sd) else None}
    out["d"] = {"ok": region.boundary_gauge_error < 1e-6 and region.open_cells == 0,
                "value": region.boundary_gauge_error, "open_cells": region.open_cells,
                "boundary_points": int(len(region.boundary))}
    zs = region.samples()
    Ys = Y(zs)
    good = (state.D.signed_distance(Ys) < state.delta) | state.net.contains(Ys)
    out["e"] = {"ok": bool(np.all(good)), "samples": int(len(zs)), "failures": int((~good).sum())}
    return out


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1, default=float)
