"""Dense complex Hermitian matrix algebra.

Everything downstream (strategy sets, payoff maps, the gain function, the
Wigner representation) operates on the two value types defined here.
Matrices are immutable after construction; operations are pure functions.

Index convention, fixed globally: in a tensor product the first factor is
the most significant part of the composite index, i.e. the composite index
of (a, b) is a * dim_B + b, matching ``numpy.kron``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .config import TOL
from .errors import DimensionMismatchError, QnashError


@dataclass(frozen=True)
class HermitianMatrix:
    """An n-by-n complex Hermitian matrix.

    The constructor symmetrizes its input, H <- (H + H^*)/2, and rejects
    inputs whose anti-Hermitian part is larger than the construction
    tolerance.  The stored array is read-only.
    """

    mat: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.mat, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise DimensionMismatchError("dimension must be at least 1")
        if not np.all(np.isfinite(a.view(float))):
            raise QnashError("matrix entries must be finite")
        skew = 0.5 * np.abs(a - a.conj().T).max()
        if skew > TOL.herm_reject:
            raise QnashError(f"input is not Hermitian: anti-Hermitian part {skew:.3e}")
        a = 0.5 * (a + a.conj().T)
        a.flags.writeable = False
        object.__setattr__(self, "mat", a)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @staticmethod
    def identity(dim: int) -> "HermitianMatrix":
        return HermitianMatrix(np.eye(dim, dtype=complex))

    @staticmethod
    def zeros(dim: int) -> "HermitianMatrix":
        return HermitianMatrix(np.zeros((dim, dim), dtype=complex))

    @staticmethod
    def diag(values: Sequence[float]) -> "HermitianMatrix":
        return HermitianMatrix(np.diag(np.asarray(values, dtype=complex)))


@dataclass(frozen=True)
class DensityMatrix:
    """A Hermitian matrix that is PSD and has unit trace, within tolerance."""

    base: HermitianMatrix

    def __post_init__(self):
        base = self.base
        if not isinstance(base, HermitianMatrix):
            base = HermitianMatrix(base)
            object.__setattr__(self, "base", base)
        lo = float(np.linalg.eigvalsh(base.mat)[0])
        if lo < TOL.density_eig:
            raise QnashError(f"not PSD: minimum eigenvalue {lo:.3e}")
        tr = float(np.trace(base.mat).real)
        if abs(tr - 1.0) > TOL.density_trace:
            raise QnashError(f"trace is {tr!r}, expected 1")

    @property
    def mat(self) -> np.ndarray:
        return self.base.mat

    @property
    def dim(self) -> int:
        return self.base.dim

    @staticmethod
    def maximally_mixed(dim: int) -> "DensityMatrix":
        return DensityMatrix(HermitianMatrix(np.eye(dim, dtype=complex) / dim))


@dataclass(frozen=True)
class FactorShape:
    """Bookkeeping for the tensor factors of a composite space."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise DimensionMismatchError(f"factor dims must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def check(self, dim: int):
        if self.total != dim:
            raise DimensionMismatchError(
                f"factor shape {self.dims} has total dimension {self.total}, matrix has {dim}")


MatrixLike = Union[HermitianMatrix, DensityMatrix, np.ndarray]


def as_array(x: MatrixLike) -> np.ndarray:
    """Unwrap to a plain complex ndarray (no copy for wrapper types)."""
    if isinstance(x, HermitianMatrix):
        return x.mat
    if isinstance(x, DensityMatrix):
        return x.mat
    return np.asarray(x, dtype=complex)


def as_herm(x: MatrixLike) -> HermitianMatrix:
    if isinstance(x, HermitianMatrix):
        return x
    if isinstance(x, DensityMatrix):
        return x.base
    return HermitianMatrix(x)


def tensor(a: MatrixLike, b: MatrixLike) -> HermitianMatrix:
    """Tensor (Kronecker) product; the first factor is most significant."""
    return HermitianMatrix(np.kron(as_array(a), as_array(b)))


def tensor_all(mats: Iterable[MatrixLike]) -> HermitianMatrix:
    out = None
    for m in mats:
        arr = as_array(m)
        out = arr if out is None else np.kron(out, arr)
    if out is None:
        raise QnashError("tensor_all needs at least one factor")
    return HermitianMatrix(out)


def _ptrace_array(a: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    m = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or any(k < 0 or k >= m for k in keep):
        raise DimensionMismatchError(f"keep={keep} is not a nonempty subset of factor indices")
    resh = a.reshape(*dims, *dims)
    # einsum: traced factors share a letter between row and column slots
    row = list(range(m))
    col = [i if i not in keep else m + i for i in range(m)]
    out = [i for i in keep] + [m + i for i in keep]
    return np.einsum(resh, row + col, out).reshape(
        math.prod([dims[i] for i in keep]), -1)


def partial_trace(a: MatrixLike, shape: FactorShape | Sequence[int],
                  keep: Iterable[int]) -> HermitianMatrix:
    """Trace out all tensor factors not listed in ``keep``.

    ``keep`` holds 0-based factor indices; the kept factors stay in their
    original relative order.
    """
    arr = as_array(a)
    if not isinstance(shape, FactorShape):
        shape = FactorShape(tuple(shape))
    shape.check(arr.shape[0])
    return HermitianMatrix(_ptrace_array(arr, shape.dims, list(keep)))


def hs_inner(a: MatrixLike, b: MatrixLike) -> float:
    """Hilbert-Schmidt inner product Tr(A B), real for Hermitian operands."""
    am, bm = as_array(a), as_array(b)
    if am.shape != bm.shape:
        raise DimensionMismatchError(f"dims {am.shape} vs {bm.shape}")
    # Tr(A^* B) with A Hermitian equals Tr(A B)
    return float(np.vdot(am, bm).real)


class MatrixNorms(NamedTuple):
    frobenius: float
    trace: float
    spectral: float


def norms(a: MatrixLike) -> MatrixNorms:
    arr = as_array(a)
    w = np.linalg.eigvalsh(arr)
    return MatrixNorms(
        frobenius=float(np.linalg.norm(arr)),
        trace=float(np.abs(w).sum()),
        spectral=float(np.abs(w).max()),
    )


def _project_psd_array(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    w = np.maximum(w, 0.0)
    out = (v * w) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def project_psd(h: MatrixLike) -> HermitianMatrix:
    """Frobenius-nearest PSD matrix: clamp negative eigenvalues to zero."""
    return HermitianMatrix(_project_psd_array(as_array(h)))


def normalize_psd(p: MatrixLike) -> DensityMatrix:
    """Map a PSD operator to a density operator.

    Divides by the trace when Tr(P) >= 1, otherwise tops up with a multiple
    of the maximally mixed state.  Rejects materially non-PSD inputs.
    """
    arr = as_array(as_herm(p))
    n = arr.shape[0]
    lo = float(np.linalg.eigvalsh(arr)[0])
    if lo < TOL.psd_input_eig:
        raise QnashError(f"normalize_psd needs a PSD input; min eigenvalue {lo:.3e}")
    if lo < TOL.density_eig:
        # forgive eigenvalues in the tolerance band so the output is a
        # valid DensityMatrix
        arr = _project_psd_array(arr)
    tr = float(np.trace(arr).real)
    if tr >= 1.0:
        out = arr / tr
    else:
        out = arr + (1.0 - tr) * np.eye(n) / n
    return DensityMatrix(HermitianMatrix(out))


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the standard simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, len(v) + 1)
    mask = u - css / ks > 0
    rho = ks[mask][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _project_density_array(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    w = project_simplex(w)
    out = (v * w) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def project_density(h: MatrixLike) -> DensityMatrix:
    """Frobenius projection onto the density operators.

    Computed spectrally: eigenvalues are projected onto the unit simplex
    while eigenvectors are kept.
    """
    return DensityMatrix(HermitianMatrix(_project_density_array(as_array(h))))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> HermitianMatrix:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianMatrix(scale * 0.5 * (a + a.conj().T))


def random_density(dim: int, rng: np.random.Generator) -> DensityMatrix:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    p = a @ a.conj().T
    return DensityMatrix(HermitianMatrix(p / np.trace(p).real))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))
