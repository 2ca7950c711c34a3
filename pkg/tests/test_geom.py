import numpy as np
import pytest
from scipy.spatial import ConvexHull

from centercut.errors import (BudgetExceeded, Infeasible, MalformedPolygon,
                              Unbounded)
from centercut.geom import (Box, Direction, Halfspace, Polytope, clip_polygon,
                            enumerate_lattice_points, enumerate_vertices,
                            lattice_width_2d, polygon_area)

SQUARE = Polytope.from_vertices_2d([[0, 0], [1, 0], [1, 1], [0, 1]])
TRIANGLE_2 = Polytope.from_vertices_2d([[0, 0], [2, 0], [0, 2]])


def _hull_polygon(pts: np.ndarray) -> Polytope:
    hull = ConvexHull(pts)
    return Polytope.from_vertices_2d(pts[hull.vertices])


def test_direction_normalized():
    d = Direction.from_vector([3.0, 4.0])
    assert abs(np.linalg.norm(d.coords) - 1.0) <= 1e-12
    assert np.allclose(d.coords, [0.6, 0.8])


def test_direction_rejects_zero():
    with pytest.raises(ValueError):
        Direction.from_vector([0.0, 0.0])


def test_halfspace_membership_openness():
    h = Halfspace.from_vector([1.0, 0.0], 0.5)          # {x1 >= 0.5}
    pts = np.array([[0.5, 0.0], [0.4, 0.0], [0.6, 0.0]])
    assert h.contains(pts).tolist() == [True, False, True]
    assert h.as_open().contains(pts).tolist() == [False, False, True]
    comp = h.complement()
    assert comp.contains(pts).tolist() == [False, True, False]
    assert not comp.closed


def test_clip_square_diagonal():
    # {x1 + x2 <= 1} keeps the lower-left triangle
    h = Halfspace.from_vector([-1.0, -1.0], -1.0)
    out = clip_polygon(SQUARE, h)
    assert polygon_area(out) == pytest.approx(0.5, abs=1e-12)
    assert len(out.vertices()) == 3


def test_clip_disjoint_halfspace_empty():
    h = Halfspace.from_vector([1.0, 0.0], 2.0)
    out = clip_polygon(SQUARE, h)
    assert polygon_area(out) == 0.0


def test_clip_triangle_quadrilateral_area():
    # triangle (0,0),(2,0),(0,2) cut by {x1 <= 1}: shoelace on the
    # corners (0,0),(1,0),(1,1),(0,2) gives 1.5
    h = Halfspace.from_vector([-1.0, 0.0], -1.0)
    out = clip_polygon(TRIANGLE_2, h)
    assert polygon_area(out) == pytest.approx(1.5, abs=1e-12)
    assert len(out.vertices()) == 4


def test_clip_rejects_nonconvex():
    zigzag = Polytope(2, (), np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 1.0],
                                       [2.0, 2.0], [0.0, 2.0]]))
    with pytest.raises(MalformedPolygon):
        clip_polygon(zigzag, Halfspace.from_vector([1.0, 0.0], 0.0))


def test_polygon_area_basics():
    assert polygon_area(SQUARE) == pytest.approx(1.0, abs=1e-12)
    tri = Polytope.from_vertices_2d([[0, 0], [1, 0], [0, 1]])
    assert polygon_area(tri) == pytest.approx(0.5, abs=1e-12)
    seg = Polytope.from_vertices_2d([[0, 0], [1, 0]])
    assert polygon_area(seg) == 0.0


def test_clip_matches_analytic_rectangle_grid():
    # axis-parallel cuts of an axis-aligned rectangle have closed-form areas
    rect = Polytope.from_vertices_2d([[0, 0], [3, 0], [3, 2], [0, 2]])
    for t in np.linspace(-1.0, 4.0, 26):
        h = Halfspace.from_vector([-1.0, 0.0], -t)      # {x1 <= t}
        want = 2.0 * min(max(float(t), 0.0), 3.0)
        assert polygon_area(clip_polygon(rect, h)) == pytest.approx(want, abs=1e-9)
    for t in np.linspace(-0.5, 2.5, 25):
        h = Halfspace.from_vector([0.0, 1.0], t)        # {x2 >= t}
        want = 3.0 * (2.0 - min(max(float(t), 0.0), 2.0))
        assert polygon_area(clip_polygon(rect, h)) == pytest.approx(want, abs=1e-9)


def test_clip_additivity_500_random_pairs():
    gen = np.random.default_rng(20240817)
    for _ in range(500):
        poly = _hull_polygon(gen.uniform(-3, 3, size=(7, 2)))
        if polygon_area(poly) < 1e-6:
            continue
        u = gen.normal(size=2)
        u /= np.linalg.norm(u)
        c = float(u @ (poly.vertices().mean(axis=0) + gen.normal(size=2)))
        h = Halfspace.from_vector(u, c)
        a = polygon_area(clip_polygon(poly, h))
        b = polygon_area(clip_polygon(poly, h.complement()))
        assert a + b == pytest.approx(polygon_area(poly), abs=1e-9)


def test_enumerate_vertices_square_triangle():
    sq = Polytope.from_rows([[1, 0, 1], [-1, 0, 0], [0, 1, 1], [0, -1, 0]])
    assert len(sq.vertices()) == 4
    tri = Polytope.from_rows([[-1, 0, 0], [0, -1, 0], [1, 1, 1]])
    assert len(tri.vertices()) == 3


def test_enumerate_vertices_infeasible_unbounded():
    with pytest.raises(Infeasible):
        enumerate_vertices(Polytope.from_rows([[-1, 0], [1, -1]], validate=False))
    with pytest.raises(Unbounded):
        enumerate_vertices(Polytope.from_rows([[-1, 0, 0], [0, -1, 0]],
                                              validate=False))


def test_vertices_satisfy_all_constraints():
    gen = np.random.default_rng(7)
    for _ in range(20):
        rows = [[1, 0, 10], [-1, 0, 10], [0, 1, 10], [0, -1, 10]]
        for _ in range(6):
            u = gen.normal(size=2)
            u /= np.linalg.norm(u)
            rows.append([u[0], u[1], gen.uniform(0.5, 6.0)])
        P = Polytope.from_rows(rows)
        V = P.vertices()
        assert len(V) >= 3
        for v in V:
            assert P.contains(v[None])[0]


def test_lattice_points_frozen_counts():
    sq2 = Polytope.from_rows([[1, 0, 2], [-1, 0, 0], [0, 1, 2], [0, -1, 0]])
    assert len(enumerate_lattice_points(sq2)) == 9
    assert len(enumerate_lattice_points(TRIANGLE_2)) == 6
    thin = Polytope.from_rows([[1, 0, 0.8], [-1, 0, -0.2], [0, 1, 1], [0, -1, 0]])
    assert len(enumerate_lattice_points(thin)) == 0


def test_lattice_points_match_box_scan():
    gen = np.random.default_rng(99)
    checked = 0
    for _ in range(14):
        poly = _hull_polygon(gen.uniform(-4, 4, size=(5, 2)))
        if polygon_area(poly) < 0.5:
            continue
        checked += 1
        got = {tuple(int(c) for c in p) for p in enumerate_lattice_points(poly)}
        lo, hi = poly.bounding_box()
        want = set()
        for i in range(int(np.floor(lo[0])) - 1, int(np.ceil(hi[0])) + 2):
            for j in range(int(np.floor(lo[1])) - 1, int(np.ceil(hi[1])) + 2):
                if poly.contains(np.array([[i, j]], dtype=float))[0]:
                    want.add((i, j))
        assert got == want
    assert checked >= 10


def test_lattice_enumeration_budget():
    big = Polytope.from_rows([[1, 0, 9000], [-1, 0, 0], [0, 1, 9000], [0, -1, 0]])
    with pytest.raises(BudgetExceeded):
        enumerate_lattice_points(big, cap=1000)


def test_lattice_width_frozen():
    B = 5
    sq = Polytope.from_vertices_2d([[0, 0], [B, 0], [B, B], [0, B]])
    w, u = lattice_width_2d(sq)
    assert w == pytest.approx(float(B), abs=1e-9)
    assert tuple(u) == (1, 0)

    flat = Polytope.from_vertices_2d([[0, 0], [10, 0], [10, 0.5], [0, 0.5]])
    w, u = lattice_width_2d(flat)
    assert w == pytest.approx(0.5, abs=1e-9)
    assert tuple(u) == (0, 1)

    tri = Polytope.from_vertices_2d([[0, 0], [3, 0], [0, 3]])
    w, _u = lattice_width_2d(tri)
    assert w == pytest.approx(3.0, abs=1e-9)


def test_lattice_width_unimodular_invariance():
    gen = np.random.default_rng(4242)
    base = Polytope.from_vertices_2d([[0, 0], [4, 1], [3, 5], [-1, 3]])
    w0, _ = lattice_width_2d(base)
    found = 0
    while found < 20:
        M = gen.integers(-3, 4, size=(2, 2))
        if abs(round(np.linalg.det(M))) != 1:
            continue
        found += 1
        img = _hull_polygon(base.vertices() @ M.T.astype(float))
        w1, _ = lattice_width_2d(img)
        assert w1 == pytest.approx(w0, abs=1e-9)


def test_box_half_open_semantics():
    b = Box([0.0, 0.0], [2.0, 2.0])
    inside = b.contains_half_open(np.array([[0.0, 0.0], [1.9999, 1.0],
                                            [2.0, 1.0], [-0.1, 0.5]]))
    assert inside.tolist() == [True, True, False, False]
    assert b.diameter() == pytest.approx(np.sqrt(8.0))
    cuts = b.half_open_cuts()
    assert len(cuts) == 4
    assert sum(1 for c in cuts if c.closed) == 2


def test_from_rows_matches_from_box():
    P = Polytope.from_rows([[1, 0, 2], [-1, 0, 0], [0, 1, 3], [0, -1, -1]])
    Q = Polytope.from_box([0.0, 1.0], [2.0, 3.0])
    assert np.allclose(P.vertices(), Q.vertices())
    assert polygon_area(P) == pytest.approx(polygon_area(Q), abs=1e-12)
