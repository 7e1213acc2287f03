"""Finite-depth driver for the stretch recursion, the completeness audit and the CLI.

One iteration takes a curve whose boundary sits on Fr D^{n-1}, builds a
boundary net of radius eps_n, stretches the curve out to Fr D^n and checks:

  D  C^1 closeness < eps_n on the previous parameter disc
  E  the trimmed boundary maps onto Fr D^n
  F  the added annulus avoids the closure of D^{n-1}_{-eps_n}
  G  every path across the added annulus has image length >= dee_n - eps_n

Reports are JSON with a schema version and hold no wall-clock data, so a
rerun with the same config and seed reproduces them byte for byte.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .convex import (Ball, ConvexBody, body_from_dict, d_proper_sequence, dee, dist_pair, parallel_body,
                     refine_pair)
from .curve import AnalyticMap, DoublePoint, Domain, _newton_pair, _segment_lengths
from .desing import DEGREE_CAP, critical_points, implicitize
from .geometry import from_real, norm, to_real
from .net import BoundaryArcSet, TangentNet, analytic_lower_bound, build_net, min_path_length
from .stretch import PolarGrid, StretchError, TrimmedRegion, run_lemma_main

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
OUT_ENV = "TANGENTNET_OUT"
EPS_RATIO_MAX = 0.5
BOUNDARY_TOL = 1e-2  # gauge error allowed on the trimmed boundary (E)
ROUND_TOL = 1e-3  # relative spread of boundary radii for a region to count as a disc

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, msg: str):
        super().__init__(f"[{stage}] {msg}")
        self.stage = stage
        self.msg = msg


# --- configuration ----------------------------------------------------------------------------


def _bodies(spec) -> list[ConvexBody]:
    if isinstance(spec, dict) and "balls" in spec:
        return [Ball(float(r)) for r in spec["balls"]]
    if isinstance(spec, dict) and "refine" in spec:
        # refined chain from a to b (both included), truncated to `count` bodies
        a, b = (body_from_dict(d) for d in spec["refine"])
        chain = refine_pair(a, b) + [b]
        return chain[: int(spec.get("count", len(chain)))]
    return [body_from_dict(d) for d in spec]


def make_curve(spec: dict, D: ConvexBody) -> AnalyticMap:
    """Initial curve: a tilted flat disc with boundary on Fr D (a ball), or explicit coefficients."""
    kind = spec.get("kind", "flat_disc")
    if kind == "flat_disc":
        if not isinstance(D, Ball):
            raise ConfigError("flat_disc needs a ball as the first body")
        b = float(spec.get("tilt", 0.2))
        R = D.radius
        if not 0 <= b < R:
            raise ConfigError("tilt must lie in [0, radius)")
        c = np.asarray(D.center, float)
        c0, c1 = complex(c[0], c[1]), complex(c[2], c[3])
        return AnalyticMap.polynomial([c0, math.sqrt(R * R - b * b)], [c1 + b])
    if kind == "coeffs":
        return AnalyticMap.polynomial([complex(*z) for z in spec["c1"]], [complex(*z) for z in spec["c2"]],
                                      float(spec.get("radius", 1.0)))
    raise ConfigError(f"unknown curve kind {kind!r}")


@dataclass
class RunConfig:
    """Run parameters; `bodies` is a list of body dicts, {"balls": [...]} or {"refine": [a, b], "count": k}."""

    bodies: object
    curve: dict = field(default_factory=lambda: {"kind": "flat_disc", "tilt": 0.2})
    depth: int = 1
    eps0: float = 0.9
    eps_ratio: float = 0.45
    delta_ratio: float = 0.25
    skeleton: int = 6
    degree: int = 300
    merge_degree: int = 60
    outer_ratio: float = 1.6
    powers: tuple = (40, 20)
    k_radius: float = 0.015
    resolution: tuple = (240, 1200)
    mode: str = "immersed"
    seed: int = 0
    samples: int = 10000
    target: float = 1.0
    out: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "bodies" not in d:
            raise ConfigError("config needs 'bodies'")
        d = dict(d)
        for k in ("powers", "resolution"):
            if k in d and isinstance(d[k], list):
                d[k] = tuple(d[k])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as f:
                d = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["powers"] = list(self.powers)
        d["resolution"] = list(self.resolution)
        return d

    def body_list(self) -> list[ConvexBody]:
        try:
            return _bodies(self.bodies)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad bodies spec: {exc}") from exc

    def schedule(self) -> list[float]:
        return [self.eps0 * self.eps_ratio**k for k in range(self.depth)]

    def validate(self) -> list[ConvexBody]:
        if self.mode not in ("immersed", "embedded"):
            raise ConfigError(f"mode must be immersed or embedded, not {self.mode!r}")
        if self.depth < 0:
            raise ConfigError("depth must be non-negative")
        if not 0 < self.eps_ratio < EPS_RATIO_MAX:
            raise ConfigError(f"eps_ratio must lie in (0, {EPS_RATIO_MAX})")
        if not 0 < self.delta_ratio < 1:
            raise ConfigError("delta_ratio must lie in (0, 1)")
        bodies = self.body_list()
        if len(bodies) < self.depth + 1:
            raise ConfigError(f"depth {self.depth} needs {self.depth + 1} bodies, got {len(bodies)}")
        if len(bodies) < 2:
            raise ConfigError("need at least two bodies")
        D0 = bodies[0]
        cap = min(dist_pair(D0, bodies[-1]), 1.0 / D0.kappa_max())
        if not 0 < self.eps0 < cap:
            raise ConfigError(f"eps0 = {self.eps0} must lie in (0, {cap:.6g}) = (0, min(dist(D0, Fr B), 1/kappa(D0)))")
        return bodies


# --- measurements ----------------------------------------------------------------------------

# polar lattice moves up to knight steps; angle and radius indices
_POLAR_STENCIL = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2)]


@dataclass
class Crossing:
    """Shortest image length across a grid region, from the inner disc to its outer frontier."""

    value: float
    slack: float
    nodes: int
    glued: int
    path: np.ndarray

    def to_dict(self):
        return {"value": self.value, "slack": self.slack, "nodes": self.nodes, "glued": self.glued}


def crossing_length(X: AnalyticMap, grid: PolarGrid, mask: np.ndarray, inner: float,
                    doubles: list[DoublePoint] | None = None) -> Crossing:
    """Dijkstra over the masked polar grid with image-chord edge weights.

    Sources are all nodes with |z| <= inner, sinks are region nodes next to
    the complement or on the last grid circle. Double points, when given,
    add a zero-length edge between their two preimages. The grid restricts
    the path set, so the value overestimates the infimum; `slack` bounds
    that by the stencil's worst angular gap plus the longest edge.
    """
    nt, nr = mask.shape
    z = grid.z
    idx = np.full(mask.shape, -1, np.int64)
    idx[mask] = np.arange(int(mask.sum()))
    n = int(mask.sum())
    rows, cols = [], []
    T, R = np.meshgrid(np.arange(nt), np.arange(nr), indexing="ij")
    for dt, dr in _POLAR_STENCIL:
        t2 = (T + dt) % nt
        r2 = R + dr
        ok = mask & (r2 < nr) & (r2 >= 0)
        t2, r2 = t2[ok], r2[ok]
        ok2 = mask[t2, r2]
        rows.append(idx[ok][ok2])
        cols.append(idx[t2[ok2], r2[ok2]])
    a = np.concatenate(rows)
    b = np.concatenate(cols)
    zf = z[mask]
    # image chords: never longer than the image of the parameter segment
    Yf = X(zf)
    w = norm(Yf[b] - Yf[a])
    src, snk = n, n + 1
    core = np.nonzero(np.abs(zf) <= inner + 1e-12)[0]
    outside = ~mask
    edge = np.zeros(mask.shape, bool)
    edge[:, -1] = mask[:, -1]
    edge[:, :-1] |= mask[:, :-1] & outside[:, 1:]
    edge |= mask & (np.roll(outside, 1, 0) | np.roll(outside, -1, 0))
    sinks = idx[edge]
    glued = 0
    extra_r, extra_c, extra_w = [], [], []
    if doubles:
        tree = cKDTree(np.stack([zf.real, zf.imag], 1))
        k = n + 2
        for dp in doubles:
            ids = []
            for P in (dp.P, dp.Q):
                d, j = tree.query([P.real, P.imag], k=4)
                extra_r.append(np.full(4, k))
                extra_c.append(j)
                extra_w.append(_segment_lengths(X, np.full(4, P), zf[j]))
                ids.append(k)
                k += 1
            extra_r.append(np.array([ids[0]]))
            extra_c.append(np.array([ids[1]]))
            extra_w.append(np.array([0.0]))
            glued += 1
    size = n + 2 + 2 * glued
    r = np.concatenate([a, np.full(len(core), src), sinks] + extra_r)
    c = np.concatenate([b, core, np.full(len(sinks), snk)] + extra_c)
    ww = np.concatenate([w, np.zeros(len(core)), np.zeros(len(sinks))] + extra_w)
    G = coo_matrix((np.maximum(ww, 1e-300), (r, c)), shape=(size, size)).tocsr()
    dist, pred = dijkstra(G, directed=False, indices=src, return_predecessors=True)
    val = float(dist[snk])
    path = []
    if np.isfinite(val):
        p = int(pred[snk])
        while p != src and p >= 0:
            if p < n:
                path.append(p)
            p = int(pred[p])
    path = path[::-1]
    # a straight segment is matched by stencil moves within half the widest gap between
    # stencil directions (atan(1/2) / 2); the grid source also sits up to one edge inside the disc
    gap = math.atan(0.5) / 2
    first = 0.0
    if path:
        at = (a == path[0]) | (b == path[0])
        first = float(w[at].max(initial=0.0))
    slack = val * (1 - math.cos(gap)) + first
    return Crossing(val, slack, size, glued, zf[np.asarray(path, int)])


def region_double_points(X: AnalyticMap, region: TrimmedRegion, h: float | None = None, tol: float = 1e-10,
                         speed_cap: float = 8.0, max_pairs: int = 2_000_000) -> tuple[list[DoublePoint], int]:
    """Double points of X on the trimmed region, and the count of under-resolved lattice points.

    Square-lattice parameters inside the region are paired when their images
    are closer than 1.5 h times the local speed while the parameters are far
    apart; each pair is refined by Newton on X(P) = X(Q). The search radius
    is capped at speed_cap times the median speed; lattice points faster
    than that are searched at reduced sensitivity and counted.
    """
    g = region.grid
    if h is None:
        h = float(g.r[-1] * 2 * np.pi / len(g.theta))
    z, _, _ = Domain(float(g.r[-1])).square_grid(h)
    dr = g.r[1] - g.r[0]
    ir = np.clip(np.rint(np.abs(z) / dr).astype(int), 0, len(g.r) - 1)
    it = np.rint(np.mod(np.angle(z), 2 * np.pi) / (2 * np.pi) * len(g.theta)).astype(int) % len(g.theta)
    z = z[region.mask[it, ir]]
    img = to_real(X(z))
    sp = norm(X.deriv(z))
    tree = cKDTree(img)
    cap = speed_cap * float(np.median(sp))
    near = tree.query_ball_point(img, 1.5 * h * np.minimum(sp, cap))
    counts = np.fromiter((len(v) for v in near), int, len(near))
    if counts.sum() > max_pairs:
        raise StageError("double_points", f"{counts.sum()} candidate pairs; image too dense at this resolution")
    a = np.repeat(np.arange(len(z)), counts)
    b = np.concatenate([np.asarray(v, int) for v in near]) if len(near) else np.zeros(0, int)
    keep = a < b
    a, b = a[keep], b[keep]
    dz = np.abs(z[a] - z[b])
    dw = np.linalg.norm(img[a] - img[b], axis=1)
    loc = np.minimum(sp[a], sp[b])
    sel = (dz > 4 * h) & (dw < 0.3 * loc * dz)
    a, b = a[sel], b[sel]
    order = np.argsort(dw[sel], kind="stable")
    found, keys, cells = [], set(), set()
    for i, j in zip(a[order], b[order]):
        cell = tuple(int(v // (4 * h)) for v in (z[i].real, z[i].imag, z[j].real, z[j].imag))
        if cell in cells:
            continue
        cells.add(cell)
        with np.errstate(over="ignore", invalid="ignore"):
            P, Q, res, ok = _newton_pair(X, z[i], z[j], sep=h)
        if not ok or res > tol or abs(P - Q) < h:
            continue
        p, q = (P, Q) if (P.real, P.imag) <= (Q.real, Q.imag) else (Q, P)
        key = (round(p.real, 6), round(p.imag, 6), round(q.real, 6), round(q.imag, 6))
        if key in keys:
            continue
        keys.add(key)
        dP, dQ = X.deriv(p), X.deriv(q)
        det = abs(dP[0] * dQ[1] - dP[1] * dQ[0]) / (norm(dP) * norm(dQ))
        found.append(DoublePoint(X(p), complex(p), complex(q), bool(det > 1e-8), float(det)))
    return found, int((sp > cap).sum())


# --- the recursion -----------------------------------------------------------------------------


def boundary_net(X: AnalyticMap, D: ConvexBody, eps: float, count: int, n: int = 2048) -> TangentNet:
    """Net whose skeleton is `count` equally spaced points of X(bR), projected onto Fr D."""
    if count < 3:
        raise ConfigError("skeleton needs at least 3 points")
    r = X.domain.outer
    pts = from_real(D._closest(to_real(X(r * np.exp(2j * np.pi * np.arange(count) / count)))))
    net = TangentNet(D, pts, eps)
    zb = X(r * np.exp(2j * np.pi * np.arange(n) / n))
    if not np.all(net.contains(zb)):
        raise StageError("net", f"{count} skeleton points do not cover X(bR) at radius {eps}")
    return net


def reparametrize(Y: AnalyticMap, region: TrimmedRegion) -> AnalyticMap:
    """The trimmed curve as a map on a disc, available when the region is a round disc.

    A non-round region would need a conformal map from the disc onto it;
    that step is not implemented, so such regions stop the recursion.
    """
    rb = np.abs(region.boundary)
    if len(rb) == 0:
        raise StageError("reparametrize", "empty trimmed boundary")
    lo, hi = float(rb.min()), float(rb.max())
    if hi - lo > ROUND_TOL * hi:
        raise StageError("reparametrize", f"trimmed region is not a round disc (boundary radius {lo:.4g}..{hi:.4g}); "
                         "a conformal reparametrization would be needed")
    return Y.with_domain(Domain(0.5 * (lo + hi)))


def _iteration(cfg: RunConfig, n: int, X: AnalyticMap, Dm: ConvexBody, Dn: ConvexBody, eps: float,
               rng: np.random.Generator, it: dict):
    pm = dee(Dm, Dn)
    it.update({"n": n, "bodies": [Dm.to_dict(), Dn.to_dict()], "dee": pm.dee, "dist": pm.dist,
               "kappa": pm.kappa, "eps": eps})
    delta = cfg.delta_ratio * eps
    it["delta"] = delta
    net = boundary_net(X, Dm, eps, cfg.skeleton)
    it["net"] = {"radius": net.radius, "skeleton": len(net)}
    try:
        region, Y, rep = run_lemma_main(X, Dm, Dn, net, delta, degree=cfg.degree, resolution=cfg.resolution,
                                        outer_ratio=cfg.outer_ratio, powers=tuple(cfg.powers),
                                        k_radius=cfg.k_radius, merge_degree=cfg.merge_degree)
    except StretchError as exc:
        raise StageError("stretch", str(exc)) from exc
    it["stretch"] = {k: rep[k] for k in ("a", "b", "c", "d", "e", "budget")}
    it["stretch"]["J"] = rep["params"]["J"]
    if not all(rep[k]["ok"] for k in "abcde"):
        bad = [k for k in "abcde" if not rep[k]["ok"]]
        raise StageError("stretch", f"stretch conclusions failed: {bad}")
    # desingularization runs only below the degree cap
    if cfg.mode == "immersed":
        it["desing"] = {"status": "off", "reason": "immersed mode"}
    elif Y.degree > DEGREE_CAP:
        it["desing"] = {"status": "waived", "reason": f"degree {Y.degree} exceeds cap {DEGREE_CAP}; continuing immersed"}
    else:
        P = implicitize(Y)
        cps = critical_points(P, Dn)
        it["desing"] = {"status": "ran", "degree": P.total_degree, "critical_points": len(cps)}
    inner = X.domain.outer
    checks = {}
    # (D) C^1 closeness on the previous disc
    checks["D"] = {"value": rep["b"]["value"], "bound": eps, "ok": bool(rep["b"]["value"] < eps)}
    # (E) boundary on Fr D^n
    checks["E"] = {"value": region.boundary_gauge_error, "bound": BOUNDARY_TOL,
                   "ok": bool(region.boundary_gauge_error < BOUNDARY_TOL and region.open_cells == 0)}
    # (F) the annulus avoids the closure of D^{n-1}_{-eps}; checked on all grid samples plus a random subset
    za = region.annulus_samples()
    pick = rng.choice(len(za), size=min(cfg.samples, len(za)), replace=False) if len(za) else []
    zs = np.concatenate([za, za[pick] * (1 - 1e-9)]) if len(za) else za
    sd = parallel_body(Dm, -eps).signed_distance(Y(zs)) if len(zs) else np.array([np.inf])
    checks["F"] = {"value": float(sd.min()), "samples": int(len(zs)), "ok": bool(sd.min() > 0)}
    # (G) image length across the annulus
    cr = crossing_length(Y, region.grid, region.mask, inner)
    need = pm.dee - eps
    checks["G"] = {"value": cr.value, "slack": cr.slack, "bound": need, "nodes": cr.nodes,
                   "ok": bool(cr.value - cr.slack >= need)}
    it["checks"] = checks
    it["one_form_waiver"] = "reference 1-form is dz on every planar domain"
    return Y, region, cr


@dataclass
class RunReport:
    config: dict
    schedule: list
    schedule_ok: bool
    iterations: list = field(default_factory=list)
    budget: float = 0.0
    status: str = "pass"
    failure: dict | None = None
    artifacts: dict = field(default_factory=dict)
    schema: str = SCHEMA_VERSION

    @property
    def ok(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def schedule_check(eps: list[float]) -> bool:
    return all(eps[k] < eps[k - 1] / 2 for k in range(1, len(eps))) and (len(eps) < 2 or sum(eps) < 2 * eps[0])


def run_recursion(config: RunConfig, write: bool = True):
    """Run `depth` stretch iterations; returns (report, final curve, last trimmed region).

    Any stage failure stops the run and returns the partial report with
    status "fail" and the failing stage named.
    """
    bodies = config.validate()
    eps = config.schedule()
    # the output location is not part of the computation; leaving it out keeps reports comparable
    cfg_d = {k: v for k, v in config.to_dict().items() if k != "out"}
    rep = RunReport(cfg_d, eps, schedule_check(eps))
    rng = np.random.default_rng(config.seed)
    X = make_curve(config.curve, bodies[0])
    region = None
    n = 0
    try:
        for n in range(1, config.depth + 1):
            if n > 1:
                X = reparametrize(X, region)
            it = {}
            rep.iterations.append(it)
            X, region, cr = _iteration(config, n, X, bodies[n - 1], bodies[n], eps[n - 1], rng, it)
            dps, unresolved = region_double_points(X, region)
            it["double_points"] = [d.to_dict() for d in dps]
            it["double_points_unresolved"] = unresolved
            failed = [k for k, v in it["checks"].items() if not v["ok"]]
            if failed:
                raise StageError("verify", f"iteration {n}: checks {failed} failed")
            rep.budget += it["dee"] - it["eps"]
            it["budget"] = rep.budget
    except StageError as exc:
        rep.status = "fail"
        rep.failure = {"stage": exc.stage, "message": exc.msg, "iteration": n}
        log.warning("run stopped: %s", exc)
    if not rep.schedule_ok:
        rep.status = "fail"
        rep.failure = rep.failure or {"stage": "schedule", "message": "eps_n < eps_{n-1}/2 violated"}
    if write and config.out:
        _write_artifacts(rep, X, region, Path(config.out))
    return rep, X, region


def _write_artifacts(rep: RunReport, X: AnalyticMap, region: TrimmedRegion | None, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": "report.json", "curve": "curve.json"}
    with open(out / "curve.json", "w") as f:
        json.dump(X.to_dict(), f, sort_keys=True, indent=1)
    if region is not None:
        paths["boundary"] = "boundary.csv"
        b = region.boundary[np.argsort(np.angle(region.boundary), kind="stable")]
        X.write_csv(out / "boundary.csv", b)
    rep.artifacts = paths
    with open(out / "report.json", "w") as f:
        f.write(rep.to_json())


# --- completeness audit ---------------------------------------------------------------------


@dataclass
class AuditResult:
    measured: float
    ledger: float
    slack: float

    @property
    def ok(self) -> bool:
        return self.measured + self.slack >= self.ledger

    def to_dict(self):
        return {"measured": self.measured, "ledger": self.ledger, "slack": self.slack, "ok": self.ok}


def image_completeness_audit(curve: AnalyticMap, report, resolution=(240, 1200),
                             region: TrimmedRegion | None = None, inner: float | None = None) -> AuditResult:
    """Image length from the initial disc to the outermost boundary, with double points glued.

    `report` is a RunReport or its dict; every iteration must carry its
    double points. With no region the whole domain of `curve` is used.
    """
    d = report.to_dict() if isinstance(report, RunReport) else report
    its = d.get("iterations", [])
    if not its:
        return AuditResult(0.0, 0.0, 0.0)
    doubles = []
    for it in its:
        if "double_points" not in it:
            raise ValueError(f"iteration {it.get('n')} carries no double-point data")
        for dp in it["double_points"]:
            doubles.append(DoublePoint(np.array([complex(*w) for w in dp["w"]]), complex(*dp["P"]),
                                       complex(*dp["Q"]), dp["normal_crossing"], dp["det"]))
    ledger = float(sum(it["dee"] - it["eps"] for it in its))
    if region is None:
        grid = PolarGrid.make(curve.domain.outer, resolution)
        mask = np.ones((len(grid.theta), len(grid.r)), bool)
    else:
        grid, mask = region.grid, region.mask
    if inner is None:
        inner = region.inner if region is not None else float(d["config"].get("inner", 0.0))
    cr = crossing_length(curve, grid, mask, inner, doubles)
    return AuditResult(cr.value, ledger, cr.slack)


# --- CLI ---------------------------------------------------------------------------------------


def _dump(obj, path: Path) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    s = json.dumps({"schema": SCHEMA_VERSION, **obj}, sort_keys=True, indent=1, default=_jsonable)
    path.write_text(s)
    return s


def _cmd_bodies(cfg: RunConfig, args) -> tuple[dict, bool]:
    bodies = cfg.body_list()
    rows = []
    for a, b in zip(bodies, bodies[1:]):
        pm = dee(a, b)
        rows.append({"inner": a.to_dict(), "outer": b.to_dict(), **pm.to_dict()})
    return {"pairs": rows}, True


def _cmd_exhaust(cfg: RunConfig, args) -> tuple[dict, bool]:
    seq = d_proper_sequence(cfg.body_list(), cfg.target)
    return {"sequence": seq.to_dict()}, True


def _cmd_net(cfg: RunConfig, args) -> tuple[dict, bool]:
    bodies = cfg.body_list()
    D, Dp = bodies[0], bodies[1]
    X = make_curve(cfg.curve, D)
    zb = X.domain.outer * np.exp(2j * np.pi * np.arange(2000) / 2000)
    A = BoundaryArcSet([X(zb)], [True])
    net = build_net(A, D, Dp, cfg.eps0)
    bound = analytic_lower_bound(net, D, Dp)
    h = args.resolution if args.resolution is not None else 0.3
    orc = min_path_length(net, D, Dp, resolution=h)
    ok = orc.reachable and orc.min_length + orc.slack >= bound
    return {"dee": dee(D, Dp).dee, "eps": cfg.eps0, "m": net.m, "radius": net.radius, "bound": bound,
            "oracle_min": orc.min_length, "oracle": orc.to_dict(), "ok": ok}, ok


def _cmd_stretch(cfg: RunConfig, args) -> tuple[dict, bool]:
    c = RunConfig.from_dict({**cfg.to_dict(), "depth": 1, "out": None})
    rep, _, _ = run_recursion(c, write=False)
    it = rep.iterations[0] if rep.iterations else {}
    return {"stretch": it.get("stretch"), "failure": rep.failure}, bool(it.get("stretch")) and (
        rep.failure is None or rep.failure["stage"] == "verify")


def _cmd_desing(cfg: RunConfig, args) -> tuple[dict, bool]:
    from .desing import implicitize, lambda_sweep
    X = make_curve(cfg.curve, cfg.body_list()[0])
    P = implicitize(X)
    sweep = lambda_sweep(P, cfg.body_list()[0], cfg.eps0)
    ok = sweep["chosen"] is not None
    return {"polynomial": P.to_dict(), "sweep": sweep}, ok


def _cmd_run(cfg: RunConfig, args, out: Path) -> tuple[dict, bool]:
    cfg.out = str(out)
    rep, _, _ = run_recursion(cfg)
    return rep.to_dict(), rep.ok


def _cmd_audit(cfg: RunConfig, args, out: Path) -> tuple[dict, bool]:
    cfg.out = str(out)
    rep, X, region = run_recursion(cfg)
    if not rep.ok:
        return {"run": rep.to_dict(), "audit": None}, False
    res = image_completeness_audit(X, rep, region=region)
    return {"run_status": rep.status, "audit": res.to_dict()}, res.ok


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tangentnet", description="Tangent nets, stretching and completeness checks.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in [("bodies", "kappa, dist and dee for consecutive bodies"),
                           ("exhaust", "d-proper sequence reaching the config target"),
                           ("net", "net build, analytic bound and graph oracle"),
                           ("stretch", "one stretch of the initial curve"),
                           ("desing", "implicitization and lambda sweep of the initial curve"),
                           ("run", "full recursion"),
                           ("audit", "recursion followed by the image completeness audit")]:
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True)
        s.add_argument("--seed", type=int)
        s.add_argument("--out")
        s.add_argument("--resolution", type=float)
        s.add_argument("--depth", type=int)
    return p


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.depth is not None:
            cfg.depth = args.depth
        if args.resolution is not None and args.command in ("stretch", "run", "audit"):
            h = args.resolution
            cfg.resolution = (int(math.ceil(cfg.outer_ratio / h)) + 1, int(math.ceil(2 * math.pi * cfg.outer_ratio / h)))
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out) if args.out else Path(cfg.out or os.environ.get(OUT_ENV, "out")) / args.command
    t0 = time.time()
    handlers = {"bodies": _cmd_bodies, "exhaust": _cmd_exhaust, "net": _cmd_net, "stretch": _cmd_stretch,
                "desing": _cmd_desing}
    if args.command in handlers:
        payload, ok = handlers[args.command](cfg, args)
        s = _dump(payload, out / f"{args.command}.json")
    else:
        fn = _cmd_run if args.command == "run" else _cmd_audit
        payload, ok = fn(cfg, args, out)
        s = _dump(payload, out / f"{args.command}.json") if args.command == "audit" else None
    log.info("%s finished in %.1f s, %s", args.command, time.time() - t0, "pass" if ok else "FAIL")
    if s is not None:
        print(s)
    else:
        print(json.dumps({"status": payload["status"], "budget": payload["budget"], "out": str(out)}))
    return EXIT_OK if ok else EXIT_FAIL


def main():
    sys.exit(cli_main())
