"""Low-dimensional convex geometry kernel.

Points, directions, halfspaces and H-representation polytopes, plus the
handful of exact primitives everything else is built on: polygon clipping,
signed areas, brute-force vertex enumeration (dimension <= 3), bounded
lattice point enumeration, and 2D lattice width.

Halfspaces are written ``{y : normal . y >= offset}`` with a unit normal.
Serialized constraint rows use the opposite convention ``a . x <= b`` (one
row ``[a_1, ..., a_n, b]``), which :meth:`Polytope.from_rows` converts.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import BudgetExceeded, Infeasible, MalformedPolygon, Unbounded

EPS = 1e-9          # vertex dedup / membership tolerance
UNIT_TOL = 1e-12    # unit-norm tolerance for directions
LATTICE_CAP = 10_000_000  # default lattice enumeration budget
WIDTH_RADIUS_CAP = 1000   # per-coordinate cap in lattice width search


def _vector(x, dim: Optional[int] = None) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.ndim != 1 or a.size < 1:
        raise ValueError("expected a 1-D coordinate vector")
    if not np.all(np.isfinite(a)):
        raise ValueError("coordinates must be finite")
    if dim is not None and a.size != dim:
        raise ValueError(f"expected dimension {dim}, got {a.size}")
    return a


@dataclass(frozen=True)
class Point:
    """A point of R^n with finite coordinates."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _vector(self.coords))

    @property
    def dim(self) -> int:
        return self.coords.size

    def __iter__(self):
        return iter(self.coords)


@dataclass(frozen=True)
class Direction:
    """A unit vector of R^n (norm within 1e-12 of 1)."""

    coords: np.ndarray

    def __post_init__(self):
        a = _vector(self.coords)
        if abs(float(np.linalg.norm(a)) - 1.0) > UNIT_TOL:
            raise ValueError("direction is not unit length")
        object.__setattr__(self, "coords", a)

    @classmethod
    def from_vector(cls, v) -> "Direction":
        a = _vector(v)
        n = float(np.linalg.norm(a))
        if n <= 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(a / n)

    @property
    def dim(self) -> int:
        return self.coords.size


@dataclass(frozen=True)
class Halfspace:
    """``{y : normal . y >= offset}``, closed or open (strict)."""

    normal: Direction
    offset: float
    closed: bool = True

    @classmethod
    def from_vector(cls, normal, offset: float, closed: bool = True) -> "Halfspace":
        d = Direction.from_vector(normal)
        scale = float(np.linalg.norm(_vector(normal)))
        return cls(d, float(offset) / scale, closed)

    @property
    def n(self) -> np.ndarray:
        return self.normal.coords

    @property
    def dim(self) -> int:
        return self.normal.dim

    def value(self, pts) -> np.ndarray:
        """Signed slack ``normal . y - offset`` for each row of ``pts``."""
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        return p @ self.n - self.offset

    def contains(self, pts, tol: float = EPS) -> np.ndarray:
        v = self.value(pts)
        if self.closed:
            return v >= -tol
        return v > tol

    def complement(self) -> "Halfspace":
        """The complementary halfspace (closedness flips)."""
        return Halfspace(Direction(-self.n), -self.offset, not self.closed)

    def as_open(self) -> "Halfspace":
        return self if not self.closed else Halfspace(self.normal, self.offset, False)

    def as_closed(self) -> "Halfspace":
        return self if self.closed else Halfspace(self.normal, self.offset, True)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; used half-open ``[lower, upper)`` as a start region."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _vector(self.lower)
        hi = _vector(self.upper, lo.size)
        if np.any(hi < lo):
            raise ValueError("box upper bound below lower bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def half_open_cuts(self) -> list[Halfspace]:
        """Halfspace list for ``lower <= y < upper``."""
        cuts = []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            cuts.append(Halfspace(Direction(e.copy()), float(self.lower[i]), True))
            cuts.append(Halfspace(Direction(-e), -float(self.upper[i]), False))
        return cuts

    def as_polytope(self) -> "Polytope":
        return Polytope.from_halfspaces([c.as_closed() for c in self.half_open_cuts()])

    def contains_half_open(self, pts, tol: float = EPS) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        ok_lo = np.all(p >= self.lower - tol, axis=1)
        ok_hi = np.all(p < self.upper - tol, axis=1)
        return ok_lo & ok_hi

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))


def _lp_feasible_bounded(constraints: Sequence[Halfspace], dim: int) -> None:
    """Raise Infeasible / Unbounded for the closed system ``n_i . y >= c_i``."""
    if not constraints:
        raise Unbounded("no constraints: whole space")
    A_ub = np.array([-h.n for h in constraints])
    b_ub = np.array([-h.offset for h in constraints])
    base = linprog(np.zeros(dim), A_ub=A_ub, b_ub=b_ub,
                   bounds=[(None, None)] * dim, method="highs")
    if base.status == 2:
        raise Infeasible("constraint system has no feasible point")
    for j in range(dim):
        c = np.zeros(dim)
        c[j] = -1.0
        for sign in (1.0, -1.0):
            r = linprog(sign * c, A_ub=A_ub, b_ub=b_ub,
                        bounds=[(None, None)] * dim, method="highs")
            if r.status == 3:
                raise Unbounded(f"coordinate {j} is unbounded")
            if r.status == 2:
                raise Infeasible("constraint system has no feasible point")


def _dedupe_rows(rows: np.ndarray, tol: float = EPS) -> np.ndarray:
    if len(rows) == 0:
        return rows
    kept: list[np.ndarray] = []
    for r in rows:
        if not any(np.linalg.norm(r - k) <= tol for k in kept):
            kept.append(r)
    return np.array(kept)


def _lex_sorted(rows: np.ndarray) -> np.ndarray:
    if len(rows) == 0:
        return rows
    order = np.lexsort(rows.T[::-1])
    return rows[order]


@dataclass(frozen=True)
class Polytope:
    """Bounded H-representation polytope (all constraints closed)."""

    dim: int
    constraints: tuple[Halfspace, ...]
    cached_vertices: Optional[np.ndarray] = None

    @classmethod
    def from_halfspaces(cls, constraints: Iterable[Halfspace], validate: bool = True,
                        vertices: Optional[np.ndarray] = None) -> "Polytope":
        cs = tuple(h.as_closed() for h in constraints)
        if not cs:
            raise ValueError("a polytope needs at least one constraint")
        dim = cs[0].dim
        if any(h.dim != dim for h in cs):
            raise ValueError("mixed constraint dimensions")
        if validate:
            _lp_feasible_bounded(cs, dim)
        verts = None if vertices is None else np.asarray(vertices, dtype=float)
        return cls(dim, cs, verts)

    @classmethod
    def from_rows(cls, rows, validate: bool = True) -> "Polytope":
        """Rows ``[a_1, ..., a_n, b]`` each meaning ``a . x <= b``."""
        arr = np.asarray(rows, dtype=float)
        if arr.ndim != 2 or arr.shape[1] < 2:
            raise ValueError("constraint rows must be [a..., b] with n >= 1")
        hs = []
        for row in arr:
            a, b = row[:-1], row[-1]
            if np.linalg.norm(a) <= 0:
                raise ValueError("zero normal in constraint row")
            # a.x <= b  <=>  (-a).x >= -b
            hs.append(Halfspace.from_vector(-a, -b, closed=True))
        return cls.from_halfspaces(hs, validate=validate)

    @classmethod
    def from_box(cls, lower, upper, validate: bool = False) -> "Polytope":
        lo, hi = _vector(lower), _vector(upper)
        hs = []
        for i in range(lo.size):
            e = np.zeros(lo.size)
            e[i] = 1.0
            hs.append(Halfspace(Direction(e.copy()), float(lo[i])))
            hs.append(Halfspace(Direction(-e), -float(hi[i])))
        return cls.from_halfspaces(hs, validate=validate)

    @classmethod
    def from_vertices_2d(cls, verts, validate: bool = False) -> "Polytope":
        """Build a 2D polytope from a convex vertex list (canonicalized)."""
        v = np.atleast_2d(np.asarray(verts, dtype=float)).reshape(-1, 2)
        v = canonical_polygon(v)
        constraints: list[Halfspace] = []
        if len(v) >= 3 and abs(shoelace_area(v)) > 0.0:
            for i in range(len(v)):
                p, q = v[i], v[(i + 1) % len(v)]
                d = q - p
                n = np.array([-d[1], d[0]])  # inward for CCW order
                constraints.append(Halfspace.from_vector(n, float(n @ p)))
        else:
            # degenerate polygon (point / segment / empty): box the hull
            if len(v) == 0:
                # canonical empty polytope
                e = np.array([1.0, 0.0])
                constraints = [Halfspace(Direction(e.copy()), 1.0),
                               Halfspace(Direction(-e), 0.0)]
            else:
                lo, hi = v.min(axis=0), v.max(axis=0)
                for i in range(2):
                    e = np.zeros(2)
                    e[i] = 1.0
                    constraints.append(Halfspace(Direction(e.copy()), float(lo[i])))
                    constraints.append(Halfspace(Direction(-e.copy()), -float(hi[i])))
                if len(v) == 2:
                    d = v[1] - v[0]
                    n = np.array([-d[1], d[0]])
                    nn = float(np.linalg.norm(n))
                    if nn > 0:
                        c = float(n @ v[0]) / nn
                        constraints.append(Halfspace.from_vector(n, c * nn))
                        constraints.append(Halfspace.from_vector(-n, -c * nn))
        return cls.from_halfspaces(constraints, validate=validate, vertices=v)

    def contains(self, pts, tol: float = EPS) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        ok = np.ones(len(p), dtype=bool)
        for h in self.constraints:
            ok &= h.contains(p, tol)
        return ok

    def vertices(self) -> np.ndarray:
        if self.cached_vertices is not None:
            return self.cached_vertices
        verts = enumerate_vertices(self)
        if self.dim == 2 and len(verts) >= 3:
            # enumeration returns lex order; rebuild the cycle by angle
            mid = verts.mean(axis=0)
            ang = np.arctan2(verts[:, 1] - mid[1], verts[:, 0] - mid[0])
            verts = canonical_polygon(verts[np.argsort(ang, kind="stable")])
        object.__setattr__(self, "cached_vertices", verts)
        return verts

    def polygon(self) -> np.ndarray:
        """CCW canonical vertex cycle (2D only)."""
        if self.dim != 2:
            raise ValueError("polygon() requires a 2-dimensional polytope")
        v = self.vertices()
        return canonical_polygon(v) if v is not None else np.zeros((0, 2))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertices()
        if len(v) == 0:
            raise Infeasible("empty polytope has no bounding box")
        return v.min(axis=0), v.max(axis=0)


# ---------------------------------------------------------------------------
# polygon primitives (raw vertex arrays, CCW order)

def shoelace_area(verts: np.ndarray) -> float:
    """Signed area of a vertex cycle; positive for CCW order."""
    v = np.asarray(verts, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def canonical_polygon(verts: np.ndarray, tol: float = EPS) -> np.ndarray:
    """Dedupe, orient CCW, and start at the lexicographically smallest vertex."""
    v = np.atleast_2d(np.asarray(verts, dtype=float)).reshape(-1, 2)
    if len(v) == 0:
        return v
    keep = [v[0]]
    for p in v[1:]:
        if np.linalg.norm(p - keep[-1]) > tol:
            keep.append(p)
    while len(keep) > 1 and np.linalg.norm(keep[0] - keep[-1]) <= tol:
        keep.pop()
    v = np.array(keep)
    if len(v) >= 3:
        if shoelace_area(v) < 0:
            v = v[::-1]
        if abs(shoelace_area(v)) <= tol * tol:
            # collapse collinear chains to their extreme points
            order = np.lexsort((v[:, 1], v[:, 0]))
            v = np.array([v[order[0]], v[order[-1]]])
            if np.linalg.norm(v[0] - v[1]) <= tol:
                v = v[:1]
    start = int(np.lexsort((v[:, 1], v[:, 0]))[0])
    return np.roll(v, -start, axis=0)


def _assert_convex_ccw(verts: np.ndarray) -> None:
    v = np.asarray(verts, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise MalformedPolygon("need at least 3 vertices in the plane")
    if not np.all(np.isfinite(v)):
        raise MalformedPolygon("non-finite vertex")
    area2 = 2.0 * shoelace_area(v)
    scale = float(np.max(np.abs(v))) + 1.0
    if area2 <= EPS * scale * scale:
        raise MalformedPolygon("vertices are not in CCW convex position")
    nxt = np.roll(v, -1, axis=0)
    nxt2 = np.roll(v, -2, axis=0)
    cross = (nxt[:, 0] - v[:, 0]) * (nxt2[:, 1] - nxt[:, 1]) - \
            (nxt[:, 1] - v[:, 1]) * (nxt2[:, 0] - nxt[:, 0])
    if np.any(cross < -EPS * scale * scale):
        raise MalformedPolygon("vertices are not in CCW convex position")


def clip_polygon_vertices(verts: np.ndarray, normal, offset: float,
                          tol: float = 1e-12) -> np.ndarray:
    """Clip a convex CCW vertex cycle against ``{y : normal . y >= offset}``."""
    v = np.atleast_2d(np.asarray(verts, dtype=float)).reshape(-1, 2)
    if len(v) == 0:
        return v
    n = np.asarray(normal, dtype=float)
    vals = v @ n - float(offset)
    scale = float(np.max(np.abs(vals))) + 1.0
    keep_tol = tol * scale
    out: list[np.ndarray] = []
    m = len(v)
    for i in range(m):
        a, b = v[i], v[(i + 1) % m]
        va, vb = vals[i], vals[(i + 1) % m]
        if va >= -keep_tol:
            out.append(a)
            if vb < -keep_tol and va > keep_tol:
                t = va / (va - vb)
                out.append(a + t * (b - a))
        elif vb > keep_tol:
            t = va / (va - vb)
            out.append(a + t * (b - a))
    if not out:
        return np.zeros((0, 2))
    return canonical_polygon(np.array(out))


def clip_polygon(poly: Polytope, h: Halfspace) -> Polytope:
    """Intersect a 2D polytope with one halfspace.

    The input must be a convex CCW polygon; the result is returned in
    canonical form (CCW, lexicographically smallest starting vertex) and may
    be empty or lower-dimensional. Openness of ``h`` does not change the
    clipped set of positive area, so it is ignored here.
    """
    if poly.dim != 2:
        raise MalformedPolygon("clip_polygon requires a 2D polytope")
    verts = poly.vertices()
    _assert_convex_ccw(verts)
    out = clip_polygon_vertices(verts, h.n, h.offset)
    return Polytope.from_vertices_2d(out, validate=False)


def polygon_area(poly: Polytope) -> float:
    """Area of a 2D polytope; degenerate vertex cycles give 0."""
    if poly.dim != 2:
        raise MalformedPolygon("polygon_area requires a 2D polytope")
    verts = poly.vertices()
    if verts is None or len(verts) < 3:
        return 0.0
    return abs(shoelace_area(canonical_polygon(verts)))


# ---------------------------------------------------------------------------
# enumeration

def enumerate_vertices(poly: Polytope) -> np.ndarray:
    """All vertices of a bounded polytope in dimension <= 3.

    Brute force over constraint subsets of size ``dim``: solve each linear
    system, keep feasible solutions, and dedupe within 1e-9.

    Raises Infeasible when the constraint set is empty and Unbounded when a
    recession direction exists.
    """
    dim = poly.dim
    if dim > 3:
        raise ValueError("vertex enumeration is limited to dimension <= 3")
    cs = poly.constraints
    _lp_feasible_bounded(cs, dim)
    if dim == 1:
        los = [h.offset / h.n[0] for h in cs if h.n[0] > 0]
        his = [h.offset / h.n[0] for h in cs if h.n[0] < 0]
        lo, hi = max(los), min(his)
        pts = np.array([[lo]]) if abs(hi - lo) <= EPS else np.array([[lo], [hi]])
        return _lex_sorted(pts)
    A = np.array([h.n for h in cs])
    b = np.array([h.offset for h in cs])
    found = []
    scale = float(np.max(np.abs(b))) + 1.0
    for idx in itertools.combinations(range(len(cs)), dim):
        M = A[list(idx)]
        rhs = b[list(idx)]
        if abs(np.linalg.det(M)) <= 1e-12:
            continue
        x = np.linalg.solve(M, rhs)
        if np.all(A @ x >= b - EPS * scale):
            found.append(x)
    if not found:
        # feasible but no basic solution in dim <= 3 only happens for
        # degenerate data; fall back to the LP witness
        r = linprog(np.zeros(dim), A_ub=-A, b_ub=-b,
                    bounds=[(None, None)] * dim, method="highs")
        found.append(np.asarray(r.x, dtype=float))
    return _lex_sorted(_dedupe_rows(np.array(found)))


def enumerate_lattice_points(poly: Polytope, cap: int = LATTICE_CAP) -> np.ndarray:
    """Integer points of a bounded polytope in dimension <= 3.

    Scans the integer grid of the bounding box and keeps points satisfying
    every (closed) constraint within 1e-9. The grid size is checked against
    ``cap`` before scanning; BudgetExceeded is raised when it would be
    larger.
    """
    dim = poly.dim
    if dim > 3:
        raise ValueError("lattice enumeration is limited to dimension <= 3")
    verts = poly.vertices()
    if len(verts) == 0:
        raise Infeasible("empty polytope")
    lo = np.ceil(verts.min(axis=0) - EPS).astype(int)
    hi = np.floor(verts.max(axis=0) + EPS).astype(int)
    counts = np.maximum(hi - lo + 1, 0)
    total = int(np.prod(counts.astype(object)))
    if total > cap:
        raise BudgetExceeded(f"lattice grid of size {total} exceeds cap {cap}")
    if total == 0:
        return np.zeros((0, dim), dtype=int)
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(dim)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    mask = poly.contains(grid.astype(float), tol=EPS)
    pts = grid[mask]
    return _lex_sorted(pts)


def _chebyshev_radius(poly: Polytope) -> float:
    dim = poly.dim
    A = np.array([h.n for h in poly.constraints])
    b = np.array([h.offset for h in poly.constraints])
    # maximize t  s.t.  n_i . x - t >= c_i  (n_i unit)
    A_ub = np.hstack([-A, np.ones((len(b), 1))])
    c = np.zeros(dim + 1)
    c[-1] = -1.0
    r = linprog(c, A_ub=A_ub, b_ub=-b,
                bounds=[(None, None)] * dim + [(0, None)], method="highs")
    if r.status != 0:
        return 0.0
    return float(r.x[-1])


def lattice_width_2d(poly: Polytope) -> tuple[float, np.ndarray]:
    """Lattice width of a 2D polytope and a minimizing integer direction.

    Minimizes ``max u.x - min u.x`` over nonzero integer directions with
    entries bounded by ``4 * ceil(diameter / w)`` where ``w`` is twice the
    Chebyshev radius (a lower estimate of the width), hard-capped at 1000
    per coordinate. Ties are broken toward the lexicographically largest
    canonical direction (first nonzero entry positive).
    """
    if poly.dim != 2:
        raise ValueError("lattice_width_2d requires a 2D polytope")
    verts = poly.vertices()
    if len(verts) == 0:
        raise Infeasible("empty polytope")
    if len(verts) == 1:
        return 0.0, np.array([1, 0])
    diffs = verts[:, None, :] - verts[None, :, :]
    diam = float(np.sqrt((diffs ** 2).sum(axis=-1)).max())
    w_lo = 2.0 * _chebyshev_radius(poly)
    if w_lo <= EPS:
        radius = WIDTH_RADIUS_CAP
    else:
        radius = min(WIDTH_RADIUS_CAP, max(1, 4 * math.ceil(diam / w_lo)))
    u1 = np.arange(0, radius + 1)
    u2 = np.arange(-radius, radius + 1)
    U = np.stack(np.meshgrid(u1, u2, indexing="ij"), axis=-1).reshape(-1, 2)
    canonical = (U[:, 0] > 0) | ((U[:, 0] == 0) & (U[:, 1] > 0))
    U = U[canonical]
    best_w = math.inf
    best_u = None
    chunk = 200_000
    for s in range(0, len(U), chunk):
        block = U[s:s + chunk].astype(float)
        proj = verts @ block.T
        widths = proj.max(axis=0) - proj.min(axis=0)
        for w, u in zip(widths, U[s:s + chunk]):
            w = float(w)
            if w < best_w - 1e-12 * (1.0 + abs(best_w) if best_w < math.inf else 1.0):
                best_w, best_u = w, u
            elif best_u is not None and abs(w - best_w) <= 1e-12 * (1.0 + abs(best_w)):
                if tuple(u) > tuple(best_u):
                    best_u = u
    return best_w, np.asarray(best_u, dtype=int)
