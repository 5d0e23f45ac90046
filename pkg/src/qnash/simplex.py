"""Barycentric subdivision of the standard simplex, in exact rationals.

Provides point location inside the level-r subdivision, the piecewise
affine interpolation of a function from its values on subdivision
vertices, and an exhaustive per-cell search for exact fixed points of that
interpolation.  Subdivision geometry is exact (fractions.Fraction
throughout); only the supplied function values are floating point, so
"exact" for the fixed-point search means residual at the level of double
precision, checked against a fixed acceptance threshold.

Cells at each level correspond to orderings of the local barycentric
coordinates: the chain of vertex subsets containing a point is read off by
sorting its coordinates in decreasing order (ties broken by ascending
vertex index, which makes location total and deterministic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy.optimize import nnls

from .config import BUDGET, TOL
from .errors import BudgetExceededError, QnashError

Vector = np.ndarray
VertexKey = tuple[Fraction, ...]


@dataclass(frozen=True)
class SimplexPoint:
    """A point of the standard simplex with exact rational coordinates."""

    coords: tuple[Fraction, ...]

    def __post_init__(self):
        coords = tuple(Fraction(c) for c in self.coords)
        if any(c < 0 for c in coords):
            raise QnashError(f"negative coordinate in {coords}")
        if sum(coords) != 1:
            raise QnashError(f"coordinates sum to {sum(coords)}, not 1")
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return len(self.coords)

    def as_floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])

    @staticmethod
    def vertex(i: int, n: int) -> "SimplexPoint":
        return SimplexPoint(tuple(Fraction(1 if j == i else 0) for j in range(n)))


@dataclass(frozen=True)
class SubsimplexAddress:
    """Chain of permutations selecting one level-r cell.

    Each permutation lists, relative to the parent cell's vertex order, the
    order in which vertices join the subset chain defining the child cell.
    """

    n: int
    chain: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for perm in self.chain:
            if sorted(perm) != list(range(self.n)):
                raise QnashError(f"not a permutation of 0..{self.n - 1}: {perm}")

    @property
    def level(self) -> int:
        return len(self.chain)


@dataclass(frozen=True)
class BarycentricCoords:
    """A located point: containing cell, exact weights, cell vertices."""

    address: SubsimplexAddress
    weights: tuple[Fraction, ...]
    vertices: tuple[SimplexPoint, ...]

    def reconstruct(self) -> SimplexPoint:
        n = len(self.weights)
        coords = [Fraction(0)] * self.vertices[0].n
        for w, v in zip(self.weights, self.vertices):
            for i, c in enumerate(v.coords):
                coords[i] += w * c
        return SimplexPoint(tuple(coords))


def barycenter(vertices: Sequence[SimplexPoint]) -> SimplexPoint:
    """Exact uniform average of a nonempty set of simplex points."""
    if not vertices:
        raise QnashError("barycenter of an empty vertex set")
    m = len(vertices)
    coords = [Fraction(0)] * vertices[0].n
    for v in vertices:
        for i, c in enumerate(v.coords):
            coords[i] += c
    return SimplexPoint(tuple(c / m for c in coords))


def standard_vertices(n: int) -> tuple[SimplexPoint, ...]:
    return tuple(SimplexPoint.vertex(i, n) for i in range(n))


def cell_count(n: int, r: int) -> int:
    return math.factorial(n) ** r


def _check_budget(n: int, r: int, max_cells: int | None, max_level: int | None):
    cells = cell_count(n, r)
    limit = BUDGET.max_cells if max_cells is None else max_cells
    lvl = BUDGET.max_level if max_level is None else max_level
    if r > lvl:
        raise BudgetExceededError(
            f"subdivision level {r} exceeds the configured maximum {lvl}")
    if cells > limit:
        raise BudgetExceededError(
            f"{cells} cells at n={n}, r={r} exceed the budget of {limit}")


def _chain_vertices(parent: Sequence[SimplexPoint],
                    perm: Sequence[int]) -> tuple[SimplexPoint, ...]:
    """Vertices of the child cell for one permutation: prefix barycenters."""
    n = len(parent)
    acc = [Fraction(0)] * parent[0].n
    out = []
    for j, p in enumerate(perm, start=1):
        for i, c in enumerate(parent[p].coords):
            acc[i] += c
        out.append(SimplexPoint(tuple(a / j for a in acc)))
    return tuple(out)


def iter_cells(n: int, r: int, max_cells: int | None = None,
               max_level: int | None = None
               ) -> Iterator[tuple[SubsimplexAddress, tuple[SimplexPoint, ...]]]:
    """All level-r cells in lexicographic address order."""
    _check_budget(n, r, max_cells, max_level)

    def rec(verts, chain, depth):
        if depth == r:
            yield SubsimplexAddress(n, chain), verts
            return
        for perm in permutations(range(n)):
            yield from rec(_chain_vertices(verts, perm), chain + (perm,), depth + 1)

    yield from rec(standard_vertices(n), (), 0)


def level_vertices(n: int, r: int, max_cells: int | None = None,
                   max_level: int | None = None) -> list[SimplexPoint]:
    """All vertices of the level-r subdivision, deduplicated.

    Level 0 gives the n simplex vertices; each further level adds the
    subset barycenters of every cell of the previous level.
    """
    if r == 0:
        _check_budget(n, 0, max_cells, max_level)
        return list(standard_vertices(n))
    seen: dict[VertexKey, SimplexPoint] = {}
    for _, verts in iter_cells(n, r - 1, max_cells, max_level):
        for mask in range(1, 1 << n):
            members = [verts[i] for i in range(n) if mask >> i & 1]
            b = barycenter(members)
            seen.setdefault(b.coords, b)
    return list(seen.values())


def locate(v: SimplexPoint, r: int) -> BarycentricCoords:
    """Containing level-r cell of a point, with exact barycentric weights.

    At each level the coordinates are sorted in decreasing order (ties by
    ascending index); successive differences scaled by the prefix length
    give the local weights, which become the coordinates one level down.
    """
    n = v.n
    coords = list(v.coords)
    chain: list[tuple[int, ...]] = []
    verts = list(standard_vertices(n))
    for _ in range(r):
        order = sorted(range(n), key=lambda i: (-coords[i], i))
        lam = []
        for j in range(n):
            cur = coords[order[j]]
            nxt = coords[order[j + 1]] if j + 1 < n else Fraction(0)
            lam.append((j + 1) * (cur - nxt))
        chain.append(tuple(order))
        verts = list(_chain_vertices(verts, order))
        coords = lam
    return BarycentricCoords(
        address=SubsimplexAddress(n, tuple(chain)),
        weights=tuple(coords),
        vertices=tuple(verts),
    )


def diameter_bound(n: int, r: int) -> float:
    """Euclidean diameter bound (1 - 1/(n+1))^r for level-r cells."""
    return (1.0 - 1.0 / (n + 1)) ** r


class VertexCache:
    """Evaluations of a simplex self-map, keyed by exact vertex."""

    def __init__(self, f: Callable[[np.ndarray], np.ndarray], n: int):
        self.f = f
        self.n = n
        self._values: dict[VertexKey, np.ndarray] = {}

    def __call__(self, v: SimplexPoint) -> np.ndarray:
        val = self._values.get(v.coords)
        if val is None:
            val = np.asarray(self.f(v.as_floats()), dtype=float)
            if val.shape != (self.n,):
                raise QnashError(f"function returned shape {val.shape}, expected ({self.n},)")
            if val.min() < -1e-9 or abs(val.sum() - 1.0) > 1e-9:
                raise QnashError(
                    f"function left the simplex at {v.coords}: min {val.min():.2e}, "
                    f"sum deviation {abs(val.sum() - 1.0):.2e}")
            val = val.copy()
            val.flags.writeable = False
            self._values[v.coords] = val
        return val


def bary_approx(f: Callable[[np.ndarray], np.ndarray], r: int, v: SimplexPoint,
                cache: VertexCache | None = None) -> np.ndarray:
    """Level-r barycentric interpolation of f, evaluated at one point."""
    cache = cache if cache is not None else VertexCache(f, v.n)
    loc = locate(v, r)
    out = np.zeros(v.n)
    for w, vert in zip(loc.weights, loc.vertices):
        if w != 0:
            out += float(w) * cache(vert)
    return out


# ---------------------------------------------------------------------------
# fixed points of the barycentric interpolation


@dataclass(frozen=True)
class FixedPointResult:
    point: SimplexPoint
    address: SubsimplexAddress
    weights: tuple[Fraction, ...]
    residual: float
    cells_scanned: int


def _exact_point(weights: np.ndarray,
                 verts: Sequence[SimplexPoint]) -> tuple[SimplexPoint, tuple[Fraction, ...]]:
    """Exact convex combination from float weights (clamped, renormalized)."""
    lam = [Fraction(max(float(w), 0.0)) for w in weights]
    total = sum(lam)
    if total == 0:
        raise QnashError("all candidate weights vanished")
    lam = [w / total for w in lam]
    coords = [Fraction(0)] * verts[0].n
    for w, v in zip(lam, verts):
        if w:
            for i, c in enumerate(v.coords):
                coords[i] += w * c
    return SimplexPoint(tuple(coords)), tuple(lam)


def _solve_cell(vmat: np.ndarray, fmat: np.ndarray) -> np.ndarray | None:
    """Weights lambda >= 0 with sum 1 and sum lambda (f(v_i) - v_i) = 0.

    The difference rows sum to zero, so one row is redundant; a square
    solve handles the generic case and non-negative least squares the
    degenerate ones.
    """
    n = vmat.shape[0]
    d = (fmat - vmat).T  # columns indexed by cell vertex
    a = np.vstack([d[:-1], np.ones(n)])
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        lam = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        lam = None
    if lam is None or not np.all(np.isfinite(lam)) or np.abs(lam).max() > 1e6:
        full = np.vstack([d, np.ones(n)])
        rhs = np.zeros(n + 1)
        rhs[-1] = 1.0
        lam, _ = nnls(full, rhs)
    if lam.min() < -TOL.weight_slack:
        return None
    lam = np.maximum(lam, 0.0)
    s = lam.sum()
    if s <= 0:
        return None
    lam = lam / s
    if np.linalg.norm(d @ lam) > TOL.fixed_point_residual:
        return None
    return lam


def _perm_at(idx: int, n: int) -> tuple[int, ...]:
    """Permutation of 0..n-1 at lexicographic index idx (factorial base)."""
    pool = list(range(n))
    out = []
    for j in range(n - 1, -1, -1):
        q, idx = divmod(idx, math.factorial(j))
        out.append(pool.pop(q))
    return tuple(out)


def _perms_from(start: int, count: int, n: int) -> Iterator[tuple[int, ...]]:
    """count permutations in lexicographic order beginning at index start."""
    if start >= math.factorial(n):
        return
    perm = list(_perm_at(start, n))
    for _ in range(count):
        yield tuple(perm)
        # lexicographic successor
        i = n - 2
        while i >= 0 and perm[i] >= perm[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while perm[j] <= perm[i]:
            j -= 1
        perm[i], perm[j] = perm[j], perm[i]
        perm[i + 1:] = reversed(perm[i + 1:])


def _scan_perm_block(bmat: np.ndarray, fmat: np.ndarray, fixed: np.ndarray,
                     n: int, start: int, count: int) -> tuple[int, np.ndarray] | None:
    """Scan ``count`` level-1 cells beginning at permutation index ``start``.

    Returns (permutation index, weights) for the first cell admitting a
    valid solution, preferring fixed vertices (which makes degenerate maps
    such as the identity return a vertex deterministically).
    """
    perms = _perms_from(start, count, n)
    for idx, perm in enumerate(perms, start=start):
        masks = []
        m = 0
        for p in perm:
            m |= 1 << p
            masks.append(m)
        hit = next((j for j, mk in enumerate(masks) if fixed[mk]), None)
        if hit is not None:
            lam = np.zeros(n)
            lam[hit] = 1.0
            return idx, lam
        lam = _solve_cell(bmat[masks], fmat[masks])
        if lam is not None:
            return idx, lam
    return None


def _subset_barycenters(parent: Sequence[SimplexPoint]) -> list[SimplexPoint]:
    """Barycenters of all nonempty vertex subsets, indexed by bitmask."""
    n = len(parent)
    out: list[SimplexPoint | None] = [None] * (1 << n)
    for mask in range(1, 1 << n):
        low = mask & -mask
        i = low.bit_length() - 1
        rest = mask ^ low
        if rest == 0:
            out[mask] = parent[i]
        else:
            k = mask.bit_count()
            prev = out[rest]
            coords = tuple((c * (k - 1) + parent[i].coords[j]) / k
                           for j, c in enumerate(prev.coords))
            out[mask] = SimplexPoint(coords)
    return out


def find_fixed_point(f: Callable[[np.ndarray], np.ndarray], n: int, r: int,
                     max_cells: int | None = None, max_level: int | None = None,
                     workers: int = 1,
                     cache: VertexCache | None = None) -> FixedPointResult:
    """Exact fixed point of the level-r barycentric interpolation of f.

    Scans cells in lexicographic address order and returns the first one
    admitting nonnegative weights with residual below the acceptance
    threshold; existence is guaranteed because the interpolation is a
    continuous self-map of the simplex.  The returned point has exact
    rational coordinates.  ``workers`` > 1 parallelizes the level-1 scan
    over permutation ranges (the result is still the lexicographically
    first success).
    """
    _check_budget(n, r, max_cells, max_level)
    cache = cache if cache is not None else VertexCache(f, n)
    if r == 0:
        raise QnashError("level must be at least 1 for a fixed-point search")

    scanned = 0
    if r == 1:
        bary = _subset_barycenters(standard_vertices(n))
        bmat = np.zeros((1 << n, n))
        fmat = np.zeros((1 << n, n))
        fixed = np.zeros(1 << n, dtype=bool)
        for mask in range(1, 1 << n):
            bmat[mask] = bary[mask].as_floats()
            fmat[mask] = cache(bary[mask])
            fixed[mask] = np.linalg.norm(fmat[mask] - bmat[mask]) <= TOL.fixed_point_residual
        total = math.factorial(n)
        hit = _parallel_scan(bmat, fmat, fixed, n, total, workers)
        if hit is not None:
            idx, lam = hit
            perm = _perm_at(idx, n)
            verts = _chain_vertices(standard_vertices(n), perm)
            point, weights = _exact_point(lam, verts)
            gr = sum(float(w) * cache(v) for w, v in zip(weights, verts))
            residual = float(np.linalg.norm(gr - point.as_floats()))
            return FixedPointResult(point, SubsimplexAddress(n, (perm,)),
                                    weights, residual, idx + 1)
        raise QnashError("no cell admitted a fixed point; the supplied "
                         "function is not a simplex self-map")

    for address, verts in iter_cells(n, r, max_cells, max_level):
        scanned += 1
        vmat = np.array([v.as_floats() for v in verts])
        fmat = np.array([cache(v) for v in verts])
        hit = next((j for j in range(n)
                    if np.linalg.norm(fmat[j] - vmat[j]) <= TOL.fixed_point_residual),
                   None)
        if hit is not None:
            lam = np.zeros(n)
            lam[hit] = 1.0
        else:
            lam = _solve_cell(vmat, fmat)
        if lam is None:
            continue
        point, weights = _exact_point(lam, verts)
        gr = sum(float(w) * cache(v) for w, v in zip(weights, verts))
        residual = float(np.linalg.norm(gr - point.as_floats()))
        return FixedPointResult(point, address, weights, residual, scanned)
    raise QnashError("no cell admitted a fixed point; the supplied function "
                     "is not a simplex self-map")


def _parallel_scan(bmat, fmat, fixed, n, total, workers):
    chunk = 4096
    if workers <= 1 or total <= chunk:
        return _scan_range(bmat, fmat, fixed, n, 0, total, chunk)
    import multiprocessing as mp

    starts = list(range(0, total, chunk * 8))
    with mp.get_context("fork").Pool(workers) as pool:
        jobs = pool.imap(_ScanJob(bmat, fmat, fixed, n, chunk * 8, total, chunk),
                         starts)
        for hit in jobs:
            if hit is not None:
                pool.terminate()
                return hit
    return None


def _scan_range(bmat, fmat, fixed, n, start, stop, chunk):
    for s in range(start, stop, chunk):
        hit = _scan_perm_block(bmat, fmat, fixed, n, s, min(chunk, stop - s))
        if hit is not None:
            return hit
    return None


class _ScanJob:
    """Picklable worker for the parallel level-1 scan."""

    def __init__(self, bmat, fmat, fixed, n, size, total, chunk):
        self.bmat, self.fmat, self.fixed = bmat, fmat, fixed
        self.n, self.size, self.total, self.chunk = n, size, total, chunk

    def __call__(self, start):
        return _scan_range(self.bmat, self.fmat, self.fixed, self.n,
                           start, min(start + self.size, self.total), self.chunk)
