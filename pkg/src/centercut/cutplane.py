"""Cutting-plane solver driven by region measures.

Each iteration picks a strategy point inside the open region, queries the
first-order oracle, and keeps only the epigraph halfspace
``h_j . (x - x_j) <= best_value - value_j``. All cuts are re-tightened to the
current best value every iteration (the tightest region the recorded queries
support), the region measure is rebuilt, and the run stops once the open
region's mass drops to ``delta``, the region empties, a zero subgradient
certifies optimality, or the call budget runs out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import adversary as adversary_mod
from . import depth as depth_mod
from .centerpoint import (ConstraintSet, centerpoint_lattice_measure,
                          centerpoint_mixed_2d, centroid, depth_guarantee)
from .depth import depth_finite, min_direction_2d
from .errors import EmptyRegion, InfeasibleStart, ZeroSubgradient
from .geom import Box, Halfspace
from .measures import (LatticeCounting, MASS_TOL, Measure, MixedInteger,
                       RngState, UniformPolytope)

DEFAULT_BUDGET = 10_000
# only an exactly vanishing subgradient certifies optimality; adversarial
# oracles legitimately answer with very small h late in a game
_ZERO_GRAD_TOL = 0.0


# ---------------------------------------------------------------------------
# first-order oracles

@dataclass
class AffineMax:
    """g(x) = max_i a_i . x + b_i; subgradient from the smallest maximizing index."""

    pieces: list
    call_count: int = 0

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("AffineMax needs at least one piece")
        self.pieces = [(np.asarray(a, dtype=float), float(b)) for a, b in self.pieces]

    def __call__(self, x):
        vals = np.array([a @ x + b for a, b in self.pieces])
        j = int(np.argmax(vals))
        return float(vals[j]), self.pieces[j][0].copy()


@dataclass
class ConvexQuadratic:
    """g(x) = (x-c)' Q (x-c) + r with Q symmetric PSD."""

    Q: np.ndarray
    c: np.ndarray
    r: float = 0.0
    call_count: int = 0

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if not np.allclose(self.Q, self.Q.T, atol=1e-9):
            raise ValueError("Q must be symmetric")
        if float(np.linalg.eigvalsh(self.Q).min()) < -1e-9:
            raise ValueError("Q must be positive semidefinite")

    def __call__(self, x):
        w = np.asarray(x, dtype=float) - self.c
        return float(w @ self.Q @ w + self.r), 2.0 * (self.Q @ w)


@dataclass
class Sum:
    parts: list
    call_count: int = 0

    def __call__(self, x):
        total, grad = 0.0, None
        for p in self.parts:
            v, g = evaluate(p, x)
            total += v
            grad = g if grad is None else grad + g
        return total, grad


@dataclass
class Adversarial:
    """Resisting oracle: answers come from an adversary game state."""

    state: object
    call_count: int = 0

    def __call__(self, x):
        return adversary_mod.adversary_query(self.state, x)


FirstOrderOracle = AffineMax | ConvexQuadratic | Sum | Adversarial


def evaluate(o, x):
    """Query the oracle: exact value and one valid subgradient."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("oracle query must be finite")
    value, grad = o(x)
    o.call_count += 1
    return value, np.asarray(grad, dtype=float)


def epigraph_cut(x_j, value_j: float, h_j, best_value: float) -> Halfspace:
    """Closed halfspace {x : h_j . (x - x_j) <= best_value - value_j}.

    Raises ZeroSubgradient when h_j vanishes: x_j is then optimal and there
    is nothing to cut.
    """
    x_j = np.asarray(x_j, dtype=float)
    h_j = np.asarray(h_j, dtype=float)
    if float(np.linalg.norm(h_j)) <= _ZERO_GRAD_TOL:
        raise ZeroSubgradient(x_j, value_j)
    rhs = float(h_j @ x_j) + (best_value - value_j)
    return Halfspace.from_vector(-h_j, -rhs)


# ---------------------------------------------------------------------------
# strategies

@dataclass(frozen=True)
class Centerpoint:
    """Query the centerpoint of the restricted measure (exact engine per family)."""


@dataclass(frozen=True)
class Centroid:
    """Query the mean point (rounded to the nearest support point when S is discrete)."""


@dataclass(frozen=True)
class RandomFeasible:
    seed: int = 0


def _nearest_row(pts, target):
    i = int(np.argmin(np.linalg.norm(pts - target, axis=1)))
    return pts[i]


def _best_finite_point(pts, weights):
    vals = [depth_finite(pts, p, weights).value for p in pts]
    top = max(vals)
    tied = [i for i, v in enumerate(vals) if v >= top - 1e-12]
    order = sorted(tied, key=lambda i: tuple(pts[i]))
    return pts[order[0]], top


def _pick_centerpoint(m: Measure, rng: RngState, i: int):
    if isinstance(m, LatticeCounting):
        if m.dim == 2:
            r = centerpoint_lattice_measure(m)
            return r.point, r.depth.value
        pts = m.active_points().astype(float)
        return _best_finite_point(pts, np.ones(len(pts)))
    if isinstance(m, UniformPolytope):
        if m.dim == 1:
            lo, hi = m._interval
            return np.array([(lo + hi) / 2.0]), 0.5
        c = centroid(m)
        if m.dim == 2:
            return c, min_direction_2d(m, c).value
        return c, depth_mod.depth_sampled(m, c, 500, rng.child(i)).value
    if isinstance(m, MixedInteger):
        if m.n == 1 and m.d == 1:
            r = centerpoint_mixed_2d(m)
            return r.point, r.depth.value
        c = _mixed_mean(m)
        return c, depth_mod.depth_sampled(m, c, 500, rng.child(i)).value
    pts = m.active_points().astype(float)
    return _best_finite_point(pts, m.active_weights())


def _mixed_mean(m: MixedInteger) -> np.ndarray:
    pts = m.sample(RngState(7), 4000)
    mean = pts.mean(axis=0)
    zs = np.array([z for z, _p, _v in m.fibers], dtype=float)
    k = int(np.argmin(np.abs(zs - mean[:m.n]).sum(axis=1)))
    z, payload, _v = m.fibers[k]
    out = np.concatenate([np.asarray(z, dtype=float), mean[m.n:]])
    if m.d == 1:
        lo, hi = payload
        out[m.n] = min(max(out[m.n], lo), hi)
    return out


def _pick_centroid(m: Measure):
    if isinstance(m, UniformPolytope):
        return centroid(m) if m.dim != 1 else np.array([sum(m._interval) / 2.0])
    if isinstance(m, MixedInteger):
        return _mixed_mean(m)
    pts = m.active_points().astype(float)
    return _nearest_row(pts, pts.mean(axis=0))


def _pick(strategy, m: Measure, rng: RngState, i: int):
    """Strategy point inside the open region, with a depth estimate when known."""
    if isinstance(strategy, Centerpoint):
        return _pick_centerpoint(m, rng, i)
    if isinstance(strategy, Centroid):
        return _pick_centroid(m), None
    if isinstance(strategy, RandomFeasible):
        return m.sample(RngState(strategy.seed).child(i), 1)[0], None
    raise TypeError(f"unknown strategy: {strategy!r}")


def _nudge_interior(x, m: Measure):
    """Push a continuous block off any cut boundary it sits on exactly."""
    if isinstance(m, LatticeCounting):
        return x
    start = m.n if isinstance(m, MixedInteger) else 0
    x = np.array(x, dtype=float)
    for c in m.region:
        if not c.closed and c.value(x[None])[0] <= 1e-12:
            tail = c.n[start:]
            if np.linalg.norm(tail) > 1e-12:
                x[start:] += 1e-9 * tail / np.linalg.norm(tail)
    return x


# ---------------------------------------------------------------------------
# solver

@dataclass(frozen=True)
class TraceRow:
    point: np.ndarray
    value: float
    subgradient: np.ndarray
    mass_after: float
    depth: float | None = None


@dataclass(frozen=True)
class SolveReport:
    best_point: np.ndarray | None
    best_value: float
    oracle_calls: int
    iteration_trace: list
    stop_reason: str
    bound_comparison: tuple


@dataclass
class RegionState:
    E0: Box
    cuts: list
    measure: Measure
    best_point: np.ndarray | None = None
    best_value: float = math.inf
    records: list = field(default_factory=list)   # (x_j, value_j, h_j)

    def rebuild(self, base: Measure):
        """Re-tighten every cut to the current best value and re-restrict."""
        self.cuts = [epigraph_cut(xj, vj, hj, self.best_value).as_open()
                     for xj, vj, hj in self.records]
        self.measure = base.restrict(tuple(self.E0.half_open_cuts()) + tuple(self.cuts))
        return self.measure


def _mass_stopped(m: Measure, delta: float) -> bool:
    # Monte Carlo masses stop conservatively: estimate + 3*SE must clear delta
    if getattr(m, "mass_exact", True):
        return m.total_mass <= delta
    return m.total_mass + 3.0 * getattr(m, "mass_stderr", 0.0) <= delta


def solve(o, S: ConstraintSet, nu: Measure, E0: Box, delta: float,
          strategy=Centerpoint(), budget: int = DEFAULT_BUDGET,
          rng: RngState | None = None) -> SolveReport:
    """Run the cutting-plane loop until the open region mass is at most delta.

    The measure ``nu`` must be supported on S; E0 membership uses half-open
    box semantics (lower faces in, upper faces out) so integer supports on
    the lower boundary stay queryable.
    """
    rng = rng if rng is not None else RngState(0)
    base_cuts = tuple(E0.half_open_cuts())
    try:
        m = nu.restrict(base_cuts)
    except EmptyRegion:
        raise InfeasibleStart("no feasible point inside the starting box") from None
    state = RegionState(E0, [], m)
    V = m.total_mass
    trace = []
    stop = None
    upper = _upper_bound_or_none(S, strategy, V, delta)

    if _mass_stopped(m, delta):
        stop = "mass_below_delta"
    calls_start = o.call_count
    while stop is None:
        if o.call_count - calls_start >= budget:
            stop = "budget"
            break
        try:
            x, est = _pick(strategy, m, rng, len(trace))
        except EmptyRegion:   # degenerate sliver region below pick tolerance
            stop = "empty_region"
            break
        x = _nudge_interior(x, m)
        value, h = evaluate(o, x)
        if value < state.best_value:
            state.best_value = value
            state.best_point = x
        state.records.append((x, value, h))
        try:
            cut = epigraph_cut(x, value, h, state.best_value)
        except ZeroSubgradient:
            trace.append(TraceRow(x, value, h, m.total_mass, est))
            stop = "zero_subgradient"
            break
        u = cut.n  # inward normal of the kept side; -u points at the removed mass
        removed = float(m.halfspace_mass(Halfspace.from_vector(-u, float(-u @ x))))
        depth_rec = removed if est is None else min(est, removed)
        try:
            m = state.rebuild(nu)
            mass = m.total_mass
        except EmptyRegion:
            mass = 0.0
        trace.append(TraceRow(x, value, h, mass, depth_rec))
        if mass <= MASS_TOL:
            stop = "empty_region"
            break
        if _mass_stopped(m, delta):
            stop = "mass_below_delta"
            break

    lower = None
    if isinstance(o, Adversarial):
        lower = adversary_mod.lower_bound_for(o.state, delta)
    return SolveReport(state.best_point, state.best_value,
                       o.call_count - calls_start, trace, stop, (upper, lower))


def _upper_bound_or_none(S, strategy, V, delta):
    if not isinstance(strategy, Centerpoint) or delta <= 0:
        return None
    g = depth_guarantee(S)
    c = g.grunbaum_floor if S.kind == "continuous" and g.grunbaum_floor else g.floor
    return iteration_upper_bound(c, V, delta)


# ---------------------------------------------------------------------------
# bounds

def iteration_upper_bound(c: float, V: float, delta: float) -> int:
    """ceil(log(V/delta) / log(1/(1-c))) oracle calls suffice at depth c."""
    if not (0 < c < 1):
        raise ValueError("depth floor c must lie in (0, 1)")
    if delta <= 0 or V < 0:
        raise ValueError("need V >= 0 and delta > 0")
    if V <= delta:
        return 0
    ratio = math.log(V / delta) / math.log(1.0 / (1.0 - c))
    return int(math.ceil(ratio - 1e-12))


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def mixed_gap_bound(L: float, delta: float, d: int) -> float:
    """Objective-gap bound L * (delta / kappa_d)^(1/d) for the continuous block."""
    if L < 0 or delta <= 0 or d < 1:
        raise ValueError("need L >= 0, delta > 0, d >= 1")
    return L * (delta / unit_ball_volume(d)) ** (1.0 / d)
