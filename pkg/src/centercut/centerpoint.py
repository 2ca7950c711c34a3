"""Centerpoint computation: points maximizing halfspace depth over a
constraint set.

Four routes: Monte Carlo sampling with exact maximization over an enriched
candidate set, exhaustive exact search over 2D lattice points, a width-based
recursion for mixed-integer sets, and the centroid witness for continuous
sets. Every returned point satisfies its constraint set exactly (integer
blocks are exact integers).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import depth as depth_mod
from . import geom
from .depth import depth_finite, min_direction_2d
from .errors import BudgetExceeded, EmptyLattice, EmptyRegion
from .geom import Polytope
from .measures import (LatticeCounting, Measure, MixedInteger, RngState,
                       UniformPolytope)

DEFAULT_C = 0.5
CANDIDATE_CAP = 1_000_000
# full line-arrangement candidate sets are only built below this size;
# larger samples fall back to enrichment around the deepest sample points
ARRANGEMENT_LIMIT = 20_000
TOP_K = 12
OMEGA_BAR = 64


@dataclass(frozen=True)
class ConstraintSet:
    """Feasible-set kind: n integer coordinates followed by d continuous."""

    kind: str   # "continuous" | "lattice" | "mixed"
    n: int
    d: int

    def __post_init__(self):
        if self.kind not in ("continuous", "lattice", "mixed"):
            raise ValueError(f"unknown constraint-set kind: {self.kind}")
        if self.n < 0 or self.d < 0 or self.n + self.d < 1:
            raise ValueError("constraint set needs at least one coordinate")

    @classmethod
    def continuous(cls, dim: int) -> "ConstraintSet":
        return cls("continuous", 0, dim)

    @classmethod
    def lattice(cls, n: int) -> "ConstraintSet":
        return cls("lattice", n, 0)

    @classmethod
    def mixed(cls, n: int, d: int) -> "ConstraintSet":
        return cls("mixed", n, d)

    @property
    def dim(self) -> int:
        return self.n + self.d


@dataclass(frozen=True)
class DepthGuarantee:
    """Depth floor 1/helly; the centroid floor is set for continuous sets
    and the recursion floor for width-based mixed results."""

    helly: int
    floor: float
    grunbaum_floor: float | None = None
    lenstra_floor: float | None = None


def depth_guarantee(S: ConstraintSet) -> DepthGuarantee:
    if S.kind == "continuous":
        nn = S.dim
        return DepthGuarantee(nn + 1, 1.0 / (nn + 1), (nn / (nn + 1.0)) ** nn)
    if S.kind == "lattice":
        return DepthGuarantee(2 ** S.n, 1.0 / 2 ** S.n)
    helly = 2 ** S.n * (S.d + 1)
    return DepthGuarantee(helly, 1.0 / helly)


@dataclass(frozen=True)
class CenterpointResult:
    point: np.ndarray
    depth: DepthResult
    method: str
    samples_used: int
    guarantee: DepthGuarantee


def _lex_best(candidates, values, tol=1e-12):
    """Index of the max value; exact lexicographically smallest point on ties."""
    values = np.asarray(values)
    top = float(values.max())
    tied = np.flatnonzero(values >= top - tol)
    pts = np.asarray(candidates)[tied]
    return int(tied[np.lexsort(pts.T[::-1])[0]])


# ---------------------------------------------------------------------------
# centroid witness

def centroid(m: UniformPolytope) -> np.ndarray:
    """Centroid of support . region: exact in dimensions 1 and 2 (fan
    triangulation); higher dimensions use a seeded 200k-sample mean and the
    result is an estimate."""
    if m.dim == 1:
        lo, hi = m._interval
        return np.array([(lo + hi) / 2.0])
    if m.dim == 2:
        verts = m.region_vertices()
        if len(verts) < 3:
            raise EmptyRegion("degenerate region has no 2D centroid")
        p0 = verts[0]
        acc = np.zeros(2)
        area = 0.0
        for i in range(1, len(verts) - 1):
            a = geom.shoelace_area(np.array([p0, verts[i], verts[i + 1]]))
            acc += a * (p0 + verts[i] + verts[i + 1]) / 3.0
            area += a
        return acc / area
    pts = m.sample(RngState(0), 200_000)
    return pts.mean(axis=0)


# ---------------------------------------------------------------------------
# Monte Carlo route

def mc_sample_size(eps: float, delta: float, vc_dim: int, C: float = DEFAULT_C) -> int:
    """Sample size C * (1/eps^2) * (vc_dim + ln(1/delta))."""
    if not (0 < eps <= 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    return int(math.ceil(C / (eps * eps) * (vc_dim + math.log(1.0 / delta))))


def _sample_depths(pts, centers):
    """Exact depth of each center under the counting measure on pts."""
    pts = np.asarray(pts, dtype=float)
    centers = np.asarray(centers, dtype=float)
    w = np.ones(len(pts))
    out = np.empty(len(centers))
    chunk = max(1, 2_000_000 // max(len(pts), 1))   # bounds the (chunk, 2N) rows
    for s in range(0, len(centers), chunk):
        out[s:s + chunk] = depth_mod._sweep_counting_min_batch(
            centers[s:s + chunk], pts, w) / len(pts)
    return out


def _line_through(p, q):
    d = q - p
    n = np.array([-d[1], d[0]])
    return n, float(n @ p)


def _pair_intersections(lines, cap):
    pts = []
    for (n1, c1), (n2, c2) in itertools.combinations(lines, 2):
        det = n1[0] * n2[1] - n1[1] * n2[0]
        if abs(det) <= 1e-12:
            continue
        pts.append(np.array([(c1 * n2[1] - c2 * n1[1]) / det,
                             (n1[0] * c2 - n2[0] * c1) / det]))
        if len(pts) > cap:
            raise BudgetExceeded("candidate cap exceeded while intersecting lines")
    return pts


def _continuous_candidates_2d(pts, cap):
    """Line-arrangement vertices to add to the sample points: the full
    arrangement when it fits, otherwise lines through the deepest samples.
    Returns (extra points, sample depths where they were computed)."""
    n = len(pts)
    n_lines = n * (n - 1) // 2
    exhaustive = n_lines * (n_lines - 1) // 2 + n <= min(cap, ARRANGEMENT_LIMIT)
    vals = None
    if exhaustive:
        lines = [_line_through(p, q) for p, q in itertools.combinations(pts, 2)]
    else:
        top, vals = _topk_indices(pts, TOP_K)
        lines = [_line_through(pts[i], pts[j])
                 for i, j in itertools.combinations(sorted(top), 2)]
    extra = _pair_intersections(lines, cap)
    if n + len(extra) > cap:
        raise BudgetExceeded(f"{n + len(extra)} candidates exceed cap {cap}")
    return np.array(extra).reshape(-1, 2), vals


_PRUNE_DIRS = 16


def _depth_upper_bounds(pts, cand):
    """Sound upper bounds on sample depth: closed-halfplane mass along a few
    fixed directions, with a membership pad wider than the exact engine's."""
    pts = np.asarray(pts, dtype=float)
    cand = np.asarray(cand, dtype=float)
    N = len(pts)
    ang = np.arange(_PRUNE_DIRS) * (math.pi / _PRUNE_DIRS)
    U = np.stack([np.sin(ang), np.cos(ang)], axis=1)
    pad = 1e-9 * max(1.0, float(np.abs(pts).max()), float(np.abs(cand).max()))
    pu = pts @ U.T
    cu = cand @ U.T
    ub = np.full(len(cand), np.inf)
    for k in range(_PRUNE_DIRS):
        col = np.sort(pu[:, k])
        above = N - np.searchsorted(col, cu[:, k] - pad, side="left")
        below = np.searchsorted(col, cu[:, k] + pad, side="right")
        ub = np.minimum(ub, np.minimum(above, below) / N)
    return ub


def _topk_indices(pts, K):
    """Indices of the K deepest sample points, value descending then index
    ascending, exactly as a full stable argsort would pick them. Depths are
    evaluated in descending upper-bound order and evaluation stops once no
    remaining bound can reach the current K-th value minus 1e-12, so boundary
    ties still resolve by index. Returns (indices, values with NaN where the
    depth was never needed)."""
    pts = np.asarray(pts, dtype=float)
    w = np.ones(len(pts))
    ub = _depth_upper_bounds(pts, pts)
    order = np.argsort(-ub, kind="stable")
    vals = np.full(len(pts), np.nan)
    chunk = max(64, 2_000_000 // max(len(pts), 1))
    kth = -np.inf
    done = 0
    for s in range(0, len(order), chunk):
        take = order[s:s + chunk]
        if done >= K and ub[take[0]] < kth - 1e-12:
            break
        vals[take] = depth_mod._sweep_counting_min_batch(pts[take], pts, w) / len(pts)
        done += len(take)
        if done >= K:
            kth = float(np.partition(vals[order[:done]], -K)[-K])
    filled = np.flatnonzero(~np.isnan(vals))
    top = filled[np.lexsort((filled, -vals[filled]))][:K]
    return top, vals


def _pruned_lex_best(pts, cand, known=None):
    """Index and value of the exact sample-depth maximizer over ``cand``.

    Equivalent to _lex_best over _sample_depths(pts, cand): candidates are
    evaluated exactly in descending upper-bound order until no remaining
    bound can reach best - 1e-12, then ties resolve lexicographically.
    ``known`` optionally carries already-exact values for a prefix of cand.
    """
    cand = np.asarray(cand, dtype=float)
    w = np.ones(len(pts))
    vals = np.full(len(cand), np.nan)
    best = -np.inf
    if known is not None and len(known):
        vals[:len(known)] = known
        filled = known[~np.isnan(known)]
        if len(filled):
            best = float(filled.max())
    ub = _depth_upper_bounds(pts, cand)
    todo = np.flatnonzero(np.isnan(vals))
    order = todo[np.argsort(-ub[todo], kind="stable")]
    chunk = max(64, 2_000_000 // max(len(pts), 1))
    for s in range(0, len(order), chunk):
        take = order[s:s + chunk]
        if ub[take[0]] < best - 1e-12:
            break
        got = depth_mod._sweep_counting_min_batch(cand[take], pts, w) / len(pts)
        vals[take] = got
        best = max(best, float(got.max()))
    tied = np.flatnonzero(~np.isnan(vals) & (vals >= best - 1e-12))
    sub = cand[tied]
    k = int(tied[np.lexsort(sub.T[::-1])[0]])
    return k, float(vals[k])


def _lattice_candidates(m: Measure, cap):
    lo, hi = None, None
    if isinstance(m, LatticeCounting):
        pts = m.active_points()
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    else:
        lo, hi = m.polytope.bounding_box()
    zlo = np.ceil(lo - geom.EPS).astype(int)
    zhi = np.floor(hi + geom.EPS).astype(int)
    counts = zhi - zlo + 1
    if np.prod(counts.astype(float)) > cap:
        raise BudgetExceeded("lattice candidate grid exceeds cap")
    axes = [np.arange(zlo[i], zhi[i] + 1) for i in range(len(zlo))]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in grid]).astype(float)


def centerpoint_monte_carlo(m: Measure, S: ConstraintSet, eps: float,
                            delta: float, rng: RngState, C: float = DEFAULT_C,
                            candidate_cap: int = CANDIDATE_CAP) -> CenterpointResult:
    """eps-approximate centerpoint with probability >= 1 - delta.

    Draws N = mc_sample_size points, then returns the S-feasible maximizer of
    exact depth under the sample counting measure. Continuous 2D candidates
    are the sample points plus line-arrangement vertices (the full
    arrangement when it fits, otherwise lines through the deepest sample
    points); lattice candidates are the integer grid of the bounding box;
    mixed candidates optimize the continuous block per fiber.
    """
    N = mc_sample_size(eps, delta, S.dim + 1, C)
    pts = m.sample(rng, N)
    guarantee = depth_guarantee(S)
    known = None
    if S.kind == "continuous":
        if S.dim == 2:
            extra, known = _continuous_candidates_2d(pts, candidate_cap)
            cand = np.vstack([pts, extra]) if len(extra) else np.asarray(pts)
        else:
            cand = pts  # dims 1 and 3: sample points only
    elif S.kind == "lattice":
        cand = _lattice_candidates(m, candidate_cap)
    else:
        cand = _mixed_candidates(m, pts, candidate_cap)
    if S.dim == 2:
        k, _val = _pruned_lex_best(pts, cand, known=known)
    else:
        depths = np.array([depth_finite(pts, c).value for c in cand])
        k = _lex_best(cand, depths)
    best = cand[k]
    res = depth_finite(pts, best)
    return CenterpointResult(best, res, "mc", N, guarantee)


def _mixed_candidates(m: MixedInteger, pts, cap):
    if m.n != 1 or m.d != 1:
        raise ValueError("mixed Monte Carlo candidates support n=1, d=1")
    cand = []
    for z, (lo, hi), _vol in m.fibers:
        ys = {lo, hi, (lo + hi) / 2.0}
        on_fiber = pts[np.abs(pts[:, 0] - z[0]) < 1e-9]
        ys.update(float(y) for y in on_fiber[:, 1])
        for y in ys:
            cand.append([float(z[0]), min(max(y, lo), hi)])
    if len(cand) > cap:
        raise BudgetExceeded(f"{len(cand)} candidates exceed cap {cap}")
    return np.array(cand)


# ---------------------------------------------------------------------------
# exact 2D lattice route

def centerpoint_lattice_measure(m: LatticeCounting) -> CenterpointResult:
    """Exact counting-measure centerpoint: evaluates the exact sweep at every
    active lattice point and keeps the deepest (lexicographic ties)."""
    pts = m.active_points()
    values = np.empty(len(pts))
    results = []
    for i, p in enumerate(pts):
        r = min_direction_2d(m, p)
        values[i] = r.value
        results.append(r)
    k = _lex_best(pts, values)
    return CenterpointResult(pts[k], results[k], "exact2d-int", 0,
                             depth_guarantee(ConstraintSet.lattice(2)))


def centerpoint_2d_integer(P: Polytope, cap: int = 100_000) -> CenterpointResult:
    """Lattice point of P maximizing exact depth of the counting measure on
    P's lattice points."""
    if P.dim != 2:
        raise ValueError("exact integer centerpoint is 2D only")
    try:
        m = LatticeCounting(P)
    except EmptyRegion:
        raise EmptyLattice("polytope contains no lattice point") from None
    if m.total_mass > cap:
        raise BudgetExceeded(f"{int(m.total_mass)} lattice points exceed cap {cap}")
    return centerpoint_lattice_measure(m)


# ---------------------------------------------------------------------------
# exact mixed route (n=1, d=1)

def centerpoint_mixed_2d(m: MixedInteger) -> CenterpointResult:
    """Depth maximizer over fibers for n=1, d=1 mixed measures.

    Depth is quasi-concave along each fiber line, so each fiber is searched
    by golden section over the continuous block (with endpoint and midpoint
    probes); the best fiber wins, lexicographic ties.
    """
    if m.n != 1 or m.d != 1:
        raise ValueError("exact mixed centerpoint supports n=1, d=1")
    cand, vals = [], []
    for z, (lo, hi), _vol in m.fibers:
        zf = float(z[0])

        def f(y, _z=zf):
            return -min_direction_2d(m, np.array([_z, y])).value

        span = hi - lo
        y0, fv = depth_mod._golden_min(f, lo, hi, tol=max(1e-9, 1e-9 * span))
        for y, v in ((y0, -fv), ((lo + hi) / 2.0, None), (lo, None), (hi, None)):
            if v is None:
                v = min_direction_2d(m, np.array([zf, y])).value
            cand.append([zf, y])
            vals.append(v)
    k = _lex_best(cand, vals, tol=1e-9)
    point = np.array(cand[k])
    return CenterpointResult(point, min_direction_2d(m, point), "exact-mixed", 0,
                             depth_guarantee(ConstraintSet.mixed(1, 1)))


# ---------------------------------------------------------------------------
# width-based mixed recursion

def _lenstra_floor(n: int, d: int) -> float:
    return 1.0 / (2 ** (n * n) * (d + 1) ** (n + 1))


def _nearest_fiber_point(m: MixedInteger, target) -> np.ndarray:
    """Nearest point of the fiber union to ``target`` (n=1 only)."""
    best = None
    for z, payload, _vol in m.fibers:
        zf = float(z[0])
        if m.d == 1:
            lo, hi = payload
            y = min(max(target[1], lo), hi)
            p = np.array([zf, y])
        else:
            p = np.array([zf] + list(target[1:]))
        key = (abs(zf - target[0]), np.linalg.norm(p - target))
        if best is None or key < best[0]:
            best = (key, p)
    return best[1]


def _project_vertices(P: Polytope, coords) -> np.ndarray:
    verts = P.vertices()[:, coords]
    return geom.canonical_polygon(verts)


def centerpoint_lenstra_mixed(P: Polytope, n: int, d: int,
                              omega_bar: float = OMEGA_BAR) -> CenterpointResult:
    """Width-based recursion for mixed sets (n <= 2, d = 1).

    Wide integer projection (lattice width > omega_bar): take the continuous
    relaxation's centroid and round to the nearest fiber point. Narrow: slice
    along the flatness direction, recurse per fiber (base case n=0 returns
    the slice midpoint), then return the best point of the finite auxiliary
    measure weighted by fiber masses.
    """
    if n < 1 or n > 2 or d != 1:
        raise ValueError("width-based recursion supports n in {1,2}, d=1")
    try:
        m = MixedInteger(P, n, d)
    except EmptyRegion:
        raise EmptyLattice("no integer fiber meets the polytope") from None
    guarantee = DepthGuarantee(2 ** n * (d + 1), 1.0 / (2 ** n * (d + 1)),
                               lenstra_floor=_lenstra_floor(n, d))
    if n == 1:
        lo, hi = P.bounding_box()
        width = float(hi[0] - lo[0])
        if width > omega_bar:
            c = centroid(UniformPolytope(P))
            point = _nearest_fiber_point(m, c)
        else:
            aux_pts = np.array([[float(z[0]), (p[0] + p[1]) / 2.0]
                                for z, p, _v in m.fibers])
            aux_w = np.array([v for _z, _p, v in m.fibers])
            vals = [depth_finite(aux_pts, q, aux_w).value for q in aux_pts]
            point = aux_pts[_lex_best(aux_pts, vals, tol=1e-12)]
        res = min_direction_2d(m, point)
        return CenterpointResult(point, res, "lenstra", 0, guarantee)
    # n == 2: slice the integer projection along its flatness direction
    proj = _project_vertices(P, [0, 1])
    width, u = geom.lattice_width_2d(Polytope.from_vertices_2d(proj))
    if width > omega_bar:
        pts = UniformPolytope(P).sample(RngState(0), 100_000)
        c = pts.mean(axis=0)
        z = np.round(c[:2])
        point = _slice_point(m, z, c)
    else:
        point = _narrow_recursion(P, m, u, omega_bar)
    res = depth_mod.depth_sampled(m, point, 2000, RngState(0))
    return CenterpointResult(point, res, "lenstra", 0, guarantee)


def _slice_point(m: MixedInteger, z, target) -> np.ndarray:
    best = None
    for fz, payload, _vol in m.fibers:
        za = np.asarray(fz, dtype=float)
        lo, hi = payload
        y = min(max(target[m.n], lo), hi)
        p = np.concatenate([za, [y]])
        key = (float(np.linalg.norm(za - z)), float(np.linalg.norm(p - target)))
        if best is None or key < best[0]:
            best = (key, p)
    return best[1]


def _narrow_recursion(P: Polytope, m: MixedInteger, u, omega_bar) -> np.ndarray:
    # parametrize {z : u.z = t} as z0 + k*w with det[u w] = +-1
    u = np.asarray(u, dtype=int)
    g = math.gcd(int(u[0]), int(u[1]))
    if g > 1:
        u = u // g
    a, b = _bezout(int(u[0]), int(u[1]))
    w = np.array([-u[1], u[0]])
    verts = P.vertices()
    tvals = verts[:, :2] @ u
    aux_pts, aux_w = [], []
    for t in range(int(math.ceil(tvals.min() - geom.EPS)),
                   int(math.floor(tvals.max() + geom.EPS)) + 1):
        z0 = np.array([a * t, b * t], dtype=float)
        rows = []
        for h in P.constraints:
            nv = h.n
            rows.append([-(nv[:2] @ w), -nv[2],
                         -(h.offset - nv[:2] @ z0)])
        try:
            sub = Polytope.from_rows(np.array(rows))
            subm = MixedInteger(sub, 1, 1)
        except Exception:
            continue
        r = centerpoint_lenstra_mixed(sub, 1, 1, omega_bar)
        k, y = r.point
        aux_pts.append(np.concatenate([z0 + k * w, [y]]))
        aux_w.append(subm.total_mass)
    if not aux_pts:
        raise EmptyLattice("no integer slice meets the polytope")
    aux_pts = np.array(aux_pts)
    vals = [depth_finite(aux_pts, q, np.array(aux_w)).value for q in aux_pts]
    return aux_pts[_lex_best(aux_pts, vals, tol=1e-12)]


def _bezout(p: int, q: int):
    """(a, b) with p*a + q*b = 1 for coprime p, q."""
    old_r, r = p, q
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        qt = old_r // r
        old_r, r = r, old_r - qt * r
        old_s, s = s, old_s - qt * s
        old_t, t = t, old_t - qt * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t
