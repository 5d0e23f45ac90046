"""Strategy sets of multi-round interactions and projections onto them.

A strategy for an r-round agent is a PSD matrix on
Y_1 x ... x Y_r x X_1 x ... x X_r (outputs first, then inputs) whose
partial-trace marginals satisfy a chain of affine constraints; round j's
output marginal must look like an identity on the round-j input once the
later rounds are traced away.  This module validates membership, and
projects arbitrary Hermitian matrices onto

  * the normalized strategy set (trace-one scaling of the strategies), and
  * the cone it generates,

by Dykstra alternating projections between the PSD cone and the affine
chain.  The affine chain itself admits an exact closed-form projection:
one top-down sweep over the levels (corrections at a level are invisible
to the levels below it and leave the levels above it satisfied).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .config import TOL
from .errors import ConvergenceError, DimensionMismatchError, QnashError
from .linalg import (HermitianMatrix, MatrixLike, _project_psd_array, as_array,
                     tensor_all)


@dataclass(frozen=True)
class StrategySignature:
    """Input/output register dimensions of an r-round strategy."""

    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]

    def __post_init__(self):
        ins = tuple(int(d) for d in self.in_dims)
        outs = tuple(int(d) for d in self.out_dims)
        if len(ins) != len(outs) or not ins:
            raise DimensionMismatchError(
                f"need matching nonempty dim lists, got in={ins} out={outs}")
        if any(d < 1 for d in ins + outs):
            raise DimensionMismatchError("register dimensions must be positive")
        object.__setattr__(self, "in_dims", ins)
        object.__setattr__(self, "out_dims", outs)

    @property
    def rounds(self) -> int:
        return len(self.in_dims)

    @property
    def total_dim(self) -> int:
        """Dimension n_k of the strategy space."""
        return math.prod(self.out_dims) * math.prod(self.in_dims)

    @property
    def input_dim(self) -> int:
        """d_k: the trace carried by every valid strategy."""
        return math.prod(self.in_dims)

    @property
    def factor_dims(self) -> tuple[int, ...]:
        return self.out_dims + self.in_dims

    def is_state_preparation(self) -> bool:
        return all(d == 1 for d in self.in_dims)

    @staticmethod
    def state_preparation(dim: int) -> "StrategySignature":
        return StrategySignature((1,), (dim,))


@dataclass(frozen=True)
class ConstraintReport:
    """Residuals of one membership check (all Frobenius norms)."""

    psd_violation: float
    level_residuals: tuple[float, ...]  # top round first, identity constraint last
    trace_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.psd_violation, self.trace_residual, *self.level_residuals)

    def passes(self, tol: float) -> bool:
        return self.max_residual <= tol


@dataclass(frozen=True)
class StrategyMatrix:
    """A validated strategy: PSD, chain constraints, trace d_k."""

    sig: StrategySignature
    q: HermitianMatrix

    def __post_init__(self):
        q = self.q if isinstance(self.q, HermitianMatrix) else HermitianMatrix(self.q)
        object.__setattr__(self, "q", q)
        if q.dim != self.sig.total_dim:
            raise DimensionMismatchError(
                f"matrix dim {q.dim} does not match signature dim {self.sig.total_dim}")
        report = check_strategy(q, self.sig)
        if report.psd_violation > -TOL.strategy_eig:
            raise QnashError(f"strategy is not PSD: violation {report.psd_violation:.3e}")
        if max(report.level_residuals) > TOL.strategy_chain:
            raise QnashError(
                f"constraint chain violated: residuals {report.level_residuals}")
        if report.trace_residual > TOL.strategy_trace:
            raise QnashError(f"trace residual {report.trace_residual:.3e}")

    @property
    def mat(self) -> np.ndarray:
        return self.q.mat

    @staticmethod
    def uniform(sig: StrategySignature) -> "StrategyMatrix":
        """The round-wise depolarizing strategy I / prod(out_dims)."""
        n = sig.total_dim
        return StrategyMatrix(sig, HermitianMatrix(
            np.eye(n, dtype=complex) / math.prod(sig.out_dims)))


# ---------------------------------------------------------------------------
# chain geometry


def _ptrace(arr: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    m = len(dims)
    resh = arr.reshape(*dims, *dims)
    row = list(range(m))
    col = [i if i not in keep else m + i for i in range(m)]
    out = [i for i in keep] + [m + i for i in keep]
    d = math.prod(dims[i] for i in keep)
    return np.einsum(resh, row + col, out).reshape(d, d)


def _embed_identity(small: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Adjoint of the partial trace: tensor an identity back onto the traced
    factors, at their original positions."""
    m = len(dims)
    traced = [i for i in range(m) if i not in keep]
    if not traced:
        return small
    d_tr = math.prod(dims[i] for i in traced)
    big = np.kron(small, np.eye(d_tr))
    order = list(keep) + traced
    resh = big.reshape([dims[i] for i in order] * 2)
    pos = {f: i for i, f in enumerate(order)}
    axes = [pos[f] for f in range(m)] + [m + pos[f] for f in range(m)]
    n = math.prod(dims)
    return resh.transpose(axes).reshape(n, n)


@dataclass(frozen=True)
class _ChainLevel:
    keep: tuple[int, ...]       # factor positions surviving T_j
    traced_dim: int             # product of traced factor dims
    last_dim: int               # dim of X_j, the last kept factor
    bottom: bool                # j == 1, the inhomogeneous constraint


@lru_cache(maxsize=None)
def _chain_levels(sig: StrategySignature) -> tuple[_ChainLevel, ...]:
    r = sig.rounds
    dims = sig.factor_dims
    levels = []
    for j in range(r, 0, -1):  # top-down: j = r, ..., 1
        keep = tuple(range(j - 1)) + tuple(range(r, r + j))
        traced = [i for i in range(2 * r) if i not in keep]
        levels.append(_ChainLevel(
            keep=keep,
            traced_dim=math.prod(dims[i] for i in traced),
            last_dim=dims[r + j - 1],
            bottom=(j == 1),
        ))
    return tuple(levels)


def _chain_project(arr: np.ndarray, sig: StrategySignature, mode: str) -> np.ndarray:
    """Exact orthogonal projection onto the affine constraint chain.

    mode selects the bottom-level constraint: 'strategy' pins the input
    marginal to the identity (trace d_k), 'normalized' to identity / d_k
    (trace 1), 'cone' only to a multiple of the identity.
    """
    dims = sig.factor_dims
    out = np.array(arr, dtype=complex)
    for lvl in _chain_levels(sig):
        marg = _ptrace(out, dims, lvl.keep)
        if not lvl.bottom:  # levels j >= 2: marginal must factor as Z x I_{X_j}
            k = marg.shape[0] // lvl.last_dim
            resh = marg.reshape(k, lvl.last_dim, k, lvl.last_dim)
            z = np.einsum("iaja->ij", resh) / lvl.last_dim
            target = np.kron(z, np.eye(lvl.last_dim))
        else:  # bottom level: marginal on X_1 alone
            d1 = lvl.last_dim
            if mode == "cone":
                target = (np.trace(marg).real / d1) * np.eye(d1)
            elif mode == "strategy":
                target = math.prod(sig.in_dims[1:]) * np.eye(d1)
            elif mode == "normalized":
                target = np.eye(d1) / d1
            else:
                raise ValueError(f"unknown mode {mode!r}")
        dev = marg - target
        out -= _embed_identity(dev, dims, lvl.keep) / lvl.traced_dim
    return 0.5 * (out + out.conj().T)


def project_affine(h: MatrixLike, sig: StrategySignature,
                   homogeneous: bool = False) -> HermitianMatrix:
    """Project onto the affine constraint chain (ignoring positivity).

    With homogeneous=False the bottom constraint pins the input marginal to
    the identity, as for actual strategies; with homogeneous=True it only
    forces proportionality to the identity, which is the chain satisfied by
    the cone of strategies.  One top-down sweep is exact.
    """
    arr = as_array(h)
    if arr.shape[0] != sig.total_dim:
        raise DimensionMismatchError(
            f"matrix dim {arr.shape[0]} vs signature dim {sig.total_dim}")
    mode = "cone" if homogeneous else "strategy"
    return HermitianMatrix(_chain_project(arr, sig, mode))


# ---------------------------------------------------------------------------
# membership


def check_strategy(q: MatrixLike, sig: StrategySignature,
                   tol: float | None = None) -> ConstraintReport:
    """Residuals of the constraint chain, the PSD condition and the trace.

    Intermediate marginals are extracted top-down by averaging: the round-j
    candidate is the round-(j+1) marginal traced over its last input factor
    and divided by that factor's dimension.
    """
    arr = as_array(q)
    if arr.shape[0] != sig.total_dim:
        raise DimensionMismatchError(
            f"matrix dim {arr.shape[0]} vs signature dim {sig.total_dim}")
    r = sig.rounds
    residuals = []
    cur = arr
    for j in range(r, 0, -1):
        dims_j = sig.out_dims[:j] + sig.in_dims[:j]
        # trace the round-j output
        keep = [i for i in range(2 * j) if i != j - 1]
        tj = _ptrace(cur, dims_j, keep)
        dx = sig.in_dims[j - 1]
        k = tj.shape[0] // dx
        if j > 1:
            resh = tj.reshape(k, dx, k, dx)
            xprev = np.einsum("iaja->ij", resh) / dx
            residuals.append(float(np.linalg.norm(tj - np.kron(xprev, np.eye(dx)))))
            cur = xprev
        else:
            residuals.append(float(np.linalg.norm(tj - np.eye(dx))))
    lo = float(np.linalg.eigvalsh(arr)[0])
    return ConstraintReport(
        psd_violation=max(0.0, -lo),
        level_residuals=tuple(residuals),
        trace_residual=abs(float(np.trace(arr).real) - sig.input_dim),
    )


def choi_of_channel(kraus: Sequence[np.ndarray], in_dim: int,
                    out_dim: int) -> StrategyMatrix:
    """Choi matrix of a channel given by Kraus operators, as a one-round
    strategy with factor order output x input."""
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    if any(k.shape != (out_dim, in_dim) for k in ks):
        raise DimensionMismatchError("Kraus operators must be out_dim x in_dim")
    comp = sum(k.conj().T @ k for k in ks)
    if np.abs(comp - np.eye(in_dim)).max() > 1e-8:
        raise QnashError("Kraus set is not trace preserving")
    j = np.zeros((out_dim * in_dim, out_dim * in_dim), dtype=complex)
    for k in ks:
        v = k.reshape(-1)  # row-major flatten matches (output, input) ordering
        j += np.outer(v, v.conj())
    sig = StrategySignature((in_dim,), (out_dim,))
    return StrategyMatrix(sig, HermitianMatrix(j))


def outcome_probability(p_a: MatrixLike, profile: Sequence[StrategyMatrix]) -> float:
    """<P_a, Q_1 x ... x Q_m> for a referee effect operator P_a."""
    arr = as_array(p_a)
    total = math.prod(s.sig.total_dim for s in profile)
    if arr.shape[0] != total:
        raise DimensionMismatchError(
            f"effect dim {arr.shape[0]}, profile product dim {total}")
    joint = tensor_all([s.q for s in profile])
    return float(np.vdot(arr, joint.mat).real)


# ---------------------------------------------------------------------------
# projection onto the strategy sets


def _dykstra(arr: np.ndarray, sig: StrategySignature, mode: str,
             tol: float, max_iter: int) -> np.ndarray:
    # far-away inputs hit a cancellation floor of order eps * |input|, so
    # the stopping tolerance cannot be tighter than that
    tol = max(tol, 8 * np.finfo(float).eps * float(np.linalg.norm(arr)))
    x = _chain_project(arr, sig, mode)
    p = np.zeros_like(x)
    for _ in range(max_iter):
        xp = x + p
        y = _project_psd_array(xp)
        p = xp - y
        x = _chain_project(y, sig, mode)
        # x satisfies the affine chain exactly; when the PSD iterate agrees
        # with it, both membership and optimality have converged
        if np.linalg.norm(x - y) <= tol:
            return x
    raise ConvergenceError(
        f"alternating projections did not reach {tol:.1e} in {max_iter} iterations")


def project_to_set(h: MatrixLike, sig: StrategySignature, cone: bool = False,
                   tol: float = TOL.projection_tol,
                   max_iter: int = TOL.projection_max_iter) -> HermitianMatrix:
    """Frobenius projection onto the normalized strategy set, or its cone.

    cone=False targets the trace-one scaling of the strategy set (PSD plus
    the affine chain with input marginal identity / d_k); cone=True targets
    the cone it generates (PSD plus the homogeneous chain).
    """
    arr = as_array(h)
    if arr.shape[0] != sig.total_dim:
        raise DimensionMismatchError(
            f"matrix dim {arr.shape[0]} vs signature dim {sig.total_dim}")
    mode = "cone" if cone else "normalized"
    return HermitianMatrix(_dykstra(arr, sig, mode, tol, max_iter))
