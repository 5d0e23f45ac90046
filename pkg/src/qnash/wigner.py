"""Discrete Wigner representation for odd dimensions.

Builds the orthogonal family of unitary, Hermitian, trace-1 operators
V_1, ..., V_{n^2} obtained by conjugating the parity operator with the
discrete Weyl operators, and the affine bijection between Hermitian
matrices on C^n and real vectors of length n^2 it induces.  Density
operators land inside the standard simplex (properly, for n > 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, QnashError
from .linalg import HermitianMatrix, MatrixLike, as_array


def _require_odd(n: int):
    if n < 1 or n % 2 == 0:
        raise DimensionMismatchError(
            f"dimension must be a positive odd integer, got {n}")


def weyl(a: int, b: int, n: int) -> np.ndarray:
    """The discrete Weyl operator X^a Z^b on C^n (n odd).

    X is the cyclic shift |a+1><a|, Z multiplies |a> by the a-th power of
    the principal n-th root of unity.
    """
    _require_odd(n)
    a, b = a % n, b % n
    omega = np.exp(2j * np.pi / n)
    w = np.zeros((n, n), dtype=complex)
    for k in range(n):
        w[(k + a) % n, k] = omega ** (b * k)
    return w


def parity_operator(n: int) -> HermitianMatrix:
    """Permutation matrix sending |a> to |-a mod n>; Hermitian, trace 1."""
    _require_odd(n)
    t = np.zeros((n, n), dtype=complex)
    for a in range(n):
        t[(n - a) % n, a] = 1.0
    return HermitianMatrix(t)


@dataclass(frozen=True)
class WignerBasis:
    """The ordered operator family {V_k} for one odd dimension.

    Ordering is lexicographic in the Weyl labels (a, b) with a outer, so
    V_1 is the parity operator itself.  Invariants (unitary, Hermitian,
    unit trace, pairwise orthogonal with squared norm n) are verified at
    construction.
    """

    n: int
    operators: tuple[HermitianMatrix, ...]
    _stack: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        _require_odd(self.n)
        n = self.n
        if len(self.operators) != n * n:
            raise QnashError(f"expected {n * n} operators, got {len(self.operators)}")
        stack = np.stack([op.mat for op in self.operators])
        eye = np.eye(n)
        for op in stack:
            if np.abs(op @ op - eye).max() > 1e-10:
                raise QnashError("basis operator is not unitary")
            if abs(np.trace(op).real - 1.0) > 1e-10 or abs(np.trace(op).imag) > 1e-10:
                raise QnashError("basis operator does not have unit trace")
        flat = stack.reshape(n * n, n * n)
        gram = (flat.conj() @ flat.T).real
        if np.abs(gram - n * np.eye(n * n)).max() > 1e-9:
            raise QnashError("basis operators are not orthogonal")
        object.__setattr__(self, "_stack", stack)

    @property
    def stack(self) -> np.ndarray:
        return self._stack


_BASIS_CACHE: dict[int, WignerBasis] = {}


def build_basis(n: int) -> WignerBasis:
    """Construct (and cache) the Wigner operator basis for odd n."""
    _require_odd(n)
    cached = _BASIS_CACHE.get(n)
    if cached is not None:
        return cached
    t = parity_operator(n).mat
    ops = []
    for a in range(n):
        for b in range(n):
            w = weyl(a, b, n)
            ops.append(HermitianMatrix(w @ t @ w.conj().T))
    basis = WignerBasis(n, tuple(ops))
    _BASIS_CACHE[n] = basis
    return basis


def psi(h: MatrixLike, basis: WignerBasis) -> np.ndarray:
    """Wigner coordinates of a Hermitian matrix: length n^2 real vector.

    Component k is (<V_k, H> + 1) / (n (n + 1)).  Density operators map
    into the standard simplex; any unit-trace Hermitian sums to 1.
    """
    arr = as_array(h)
    n = basis.n
    if arr.shape != (n, n):
        raise DimensionMismatchError(f"matrix is {arr.shape}, basis dimension is {n}")
    inner = np.einsum("kij,ji->k", basis.stack, arr).real
    return (inner + 1.0) / (n * (n + 1))


def psi_inv(v: np.ndarray, basis: WignerBasis) -> HermitianMatrix:
    """Inverse Wigner map: (n+1) * sum_k v_k V_k - I."""
    v = np.asarray(v, dtype=float)
    n = basis.n
    if v.shape != (n * n,):
        raise DimensionMismatchError(f"vector has length {v.shape}, expected {n * n}")
    out = (n + 1) * np.einsum("k,kij->ij", v, basis.stack) - np.eye(n)
    return HermitianMatrix(out)
