import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest

from conftest import banach_fixed_point
from qnash import (BudgetExceededError, QnashError, SimplexPoint, VertexCache,
                   bary_approx, barycenter, cell_count, diameter_bound,
                   find_fixed_point, iter_cells, level_vertices, locate,
                   standard_vertices)


def test_simplex_point_invariants():
    SimplexPoint((F(1, 2), F(1, 2)))
    with pytest.raises(QnashError):
        SimplexPoint((F(3, 2), F(-1, 2)))
    with pytest.raises(QnashError):
        SimplexPoint((F(1, 2), F(1, 3)))


def test_barycenter_examples():
    u = standard_vertices(3)
    assert barycenter([u[0]]).coords == (F(1), F(0), F(0))
    assert barycenter([u[0], u[1]]).coords == (F(1, 2), F(1, 2), F(0))
    assert barycenter(list(u)).coords == (F(1, 3), F(1, 3), F(1, 3))
    with pytest.raises(QnashError):
        barycenter([])


def _enumerate_vertices_reference(n: int, r: int) -> set:
    """Independent vertex enumeration: explicit recursive subdivision."""
    cells = [tuple(tuple(F(1 if j == i else 0) for j in range(n)) for i in range(n))]
    for _ in range(r - 1):
        nxt = []
        for cell in cells:
            for perm in itertools.permutations(range(n)):
                verts = []
                for j in range(1, n + 1):
                    members = [cell[perm[i]] for i in range(j)]
                    avg = tuple(sum(col) / j for col in zip(*members))
                    verts.append(avg)
                nxt.append(tuple(verts))
        cells = nxt
    points = set()
    for cell in cells:
        for size in range(1, n + 1):
            for subset in itertools.combinations(range(n), size):
                members = [cell[i] for i in subset]
                points.add(tuple(sum(col) / size for col in zip(*members)))
    return points


def test_level_vertex_counts():
    assert len(level_vertices(3, 0)) == 3
    assert len(level_vertices(3, 1)) == 7  # 2^3 - 1
    assert len(level_vertices(2, 2)) == 5
    for n, r in ((2, 1), (2, 2), (3, 1), (3, 2), (4, 1), (4, 2)):
        got = {p.coords for p in level_vertices(n, r)}
        want = _enumerate_vertices_reference(n, r)
        assert got == want


def test_cell_count_and_iteration():
    assert cell_count(3, 1) == 6
    assert cell_count(3, 2) == 36
    cells = list(iter_cells(3, 1))
    assert len(cells) == 6
    addresses = [c[0].chain for c in cells]
    assert addresses == sorted(addresses)  # lexicographic order


def test_locate_vertex():
    v = SimplexPoint.vertex(0, 3)
    for r in (1, 2):
        loc = locate(v, r)
        nonzero = [(w, vert) for w, vert in zip(loc.weights, loc.vertices) if w != 0]
        assert len(nonzero) == 1 and nonzero[0][0] == 1
        assert nonzero[0][1].coords == v.coords


# frozen example: (3/5, 3/10, 1/10) lies in the chain {1} < {1,2} < {1,2,3}
# with weights (3/10, 2/5, 3/10) on the chain barycenters
def test_locate_frozen_example():
    p = SimplexPoint((F(3, 5), F(3, 10), F(1, 10)))
    loc = locate(p, 1)
    assert loc.address.chain == ((0, 1, 2),)
    assert loc.weights == (F(3, 10), F(2, 5), F(3, 10))
    assert loc.vertices[0].coords == (F(1), F(0), F(0))
    assert loc.vertices[1].coords == (F(1, 2), F(1, 2), F(0))
    assert loc.vertices[2].coords == (F(1, 3), F(1, 3), F(1, 3))
    assert loc.reconstruct().coords == p.coords


def test_locate_cell_barycenter_uniform_weights():
    for address, verts in itertools.islice(iter_cells(3, 1), 3):
        center = barycenter(list(verts))
        loc = locate(center, 1)
        assert all(w == F(1, 3) for w in loc.weights)


def test_locate_reconstruct_exact(rng):
    for _ in range(50):
        raw = [F(int(a), 97) for a in rng.integers(0, 30, size=4)]
        total = sum(raw)
        if total == 0:
            continue
        p = SimplexPoint(tuple(c / total for c in raw))
        for r in (1, 2):
            assert locate(p, r).reconstruct().coords == p.coords


def test_locate_partition(rng):
    # interior points fall strictly inside exactly one cell
    for _ in range(20):
        w = rng.dirichlet(np.ones(3) * 5)
        frac = [F(int(x * 10 ** 6), 10 ** 6) for x in w]
        frac[0] += 1 - sum(frac)
        p = SimplexPoint(tuple(frac))
        containing = []
        for address, verts in iter_cells(3, 1):
            vmat = np.array([v.as_floats() for v in verts]).T
            lam, *_ = np.linalg.lstsq(np.vstack([vmat, np.ones(3)]),
                                      np.append(p.as_floats(), 1.0), rcond=None)
            if lam.min() > 1e-9:
                containing.append(address)
        if containing:  # strictly interior to some cell
            assert len(containing) == 1
            assert locate(p, 1).address == containing[0]


def test_bary_approx_identity_and_constant(rng):
    p = SimplexPoint((F(3, 5), F(3, 10), F(1, 10)))
    assert np.abs(bary_approx(lambda v: v, 1, p) - p.as_floats()).max() < 1e-15
    c = np.array([0.2, 0.5, 0.3])
    assert np.abs(bary_approx(lambda v: c, 2, p) - c).max() < 1e-15


# frozen example: level-1 interpolation of the cyclic rotation at the center
# of the first cell averages the rotated cell vertices:
# (rot(1,0,0) + rot(1/2,1/2,0) + rot(1/3,1/3,1/3)) / 3 = (1/9, 11/18, 5/18)
def test_bary_approx_rotation_frozen():
    first_cell_center = barycenter([
        SimplexPoint((F(1), F(0), F(0))),
        SimplexPoint((F(1, 2), F(1, 2), F(0))),
        SimplexPoint((F(1, 3), F(1, 3), F(1, 3))),
    ])
    got = bary_approx(lambda v: np.roll(v, 1), 1, first_cell_center)
    assert np.abs(got - np.array([1 / 9, 11 / 18, 5 / 18])).max() < 1e-12


def test_bary_approx_agrees_with_f_on_vertices():
    f = lambda v: np.roll(v, 1)
    for p in level_vertices(3, 2):
        out = bary_approx(f, 2, p)
        assert np.abs(out - f(p.as_floats())).max() < 1e-15


def test_bary_approx_rejects_off_simplex():
    with pytest.raises(QnashError):
        bary_approx(lambda v: v + 0.1, 1, SimplexPoint.vertex(0, 3))


def test_fixed_point_identity_returns_first_vertex():
    res = find_fixed_point(lambda v: v, 3, 1)
    assert res.point.coords == (F(1), F(0), F(0))
    assert res.residual <= 1e-9
    assert res.cells_scanned == 1


def test_fixed_point_constant():
    c = np.array([0.15, 0.35, 0.5])
    res = find_fixed_point(lambda v: c, 3, 1)
    assert np.linalg.norm(res.point.as_floats() - c) <= 1e-9
    res2 = find_fixed_point(lambda v: c, 3, 2)
    assert np.linalg.norm(res2.point.as_floats() - c) <= 1e-9


def test_fixed_point_contraction_vs_banach(rng):
    target = np.ones(3) / 3
    f = lambda v: (v + target) / 2
    res = find_fixed_point(f, 3, 1)
    assert res.residual <= 1e-9
    truth = banach_fixed_point(f, np.array([1.0, 0.0, 0.0]))
    assert np.linalg.norm(res.point.as_floats() - truth) <= diameter_bound(3, 1)
    # an off-center contraction exercises the bound non-trivially
    t2 = np.array([0.7, 0.2, 0.1])
    f2 = lambda v: (v + t2) / 2
    res2 = find_fixed_point(f2, 3, 2)
    truth2 = banach_fixed_point(f2, np.ones(3) / 3)
    assert res2.residual <= 1e-9
    assert np.linalg.norm(res2.point.as_floats() - truth2) <= diameter_bound(3, 2)


def test_fixed_point_rotation():
    for n, r in ((3, 1), (3, 2), (4, 1), (4, 2)):
        res = find_fixed_point(lambda v: np.roll(v, 1), n, r)
        assert res.residual <= 1e-9
        g = bary_approx(lambda v: np.roll(v, 1), r, res.point)
        assert np.linalg.norm(g - res.point.as_floats()) <= 1e-9


def test_fixed_point_residual_property(rng):
    # residual claim holds with an independent interpolation evaluation
    c = np.array([0.3, 0.3, 0.4])
    f = lambda v: 0.7 * v + 0.3 * c
    res = find_fixed_point(f, 3, 2)
    g = bary_approx(f, 2, res.point)
    assert np.linalg.norm(g - res.point.as_floats()) <= 1e-9


def test_budget_guardrails():
    with pytest.raises(BudgetExceededError):
        find_fixed_point(lambda v: v, 4, 3)  # level above the default cap
    with pytest.raises(BudgetExceededError):
        find_fixed_point(lambda v: v, 11, 1)  # 11! cells over the cell cap
    with pytest.raises(BudgetExceededError):
        list(iter_cells(4, 2, max_cells=100))


def test_parallel_scan_matches_serial():
    target = np.array([0.05, 0.1, 0.15, 0.2, 0.5])
    f = lambda v: target
    serial = find_fixed_point(f, 5, 1, workers=1)
    par = find_fixed_point(f, 5, 1, workers=2)
    assert serial.point == par.point
    assert serial.address == par.address


def test_diameter_bound_values():
    assert diameter_bound(3, 0) == 1.0
    assert diameter_bound(3, 2) == pytest.approx(9 / 16)


def test_diameter_bound_sampled_pairs(rng):
    # the per-level shrink factor is 1 - 1/(n+1); the absolute distance
    # bound carries the initial simplex diameter sqrt(2) (the standard
    # simplex has vertex pairs at that distance)
    for n, r in ((2, 1), (3, 1), (3, 2), (4, 2)):
        bound = math.sqrt(2) * diameter_bound(n, r)
        cells = list(iter_cells(n, r))
        for _ in range(200):
            _, verts = cells[rng.integers(0, len(cells))]
            vmat = np.array([v.as_floats() for v in verts])
            u = rng.dirichlet(np.ones(n)) @ vmat
            w = rng.dirichlet(np.ones(n)) @ vmat
            assert np.linalg.norm(u - w) <= bound + 1e-12


def test_vertex_cache_reuses_evaluations():
    calls = []

    def f(v):
        calls.append(v.copy())
        return v

    cache = VertexCache(f, 3)
    p = SimplexPoint((F(1, 2), F(1, 4), F(1, 4)))
    bary_approx(f, 1, p, cache=cache)
    first = len(calls)
    bary_approx(f, 1, p, cache=cache)
    assert len(calls) == first
