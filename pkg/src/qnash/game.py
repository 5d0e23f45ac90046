"""Quantum games: payoff operators, effective payoff maps, best responses
and equilibrium certification.

A game is a list of Hermitian payoff operators on the tensor product of
the players' strategy spaces (factors ordered by player index).  Player
k's expected payoff is the inner product of their payoff operator with the
tensor product of all chosen strategies; contracting everyone else's
strategy out of the payoff operator gives the effective payoff observable
the player is optimizing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import TOL
from .errors import ConvergenceError, DimensionMismatchError, QnashError
from .linalg import HermitianMatrix, MatrixLike, as_array
from .strategies import (StrategyMatrix, StrategySignature, check_strategy,
                         project_to_set)


@dataclass(frozen=True)
class QuantumGame:
    sigs: tuple[StrategySignature, ...]
    payoffs: tuple[HermitianMatrix, ...]

    def __post_init__(self):
        sigs = tuple(self.sigs)
        payoffs = tuple(p if isinstance(p, HermitianMatrix) else HermitianMatrix(p)
                        for p in self.payoffs)
        if not sigs or len(sigs) != len(payoffs):
            raise DimensionMismatchError("need one payoff operator per player")
        total = math.prod(s.total_dim for s in sigs)
        for p in payoffs:
            if p.dim != total:
                raise DimensionMismatchError(
                    f"payoff dim {p.dim} does not match joint dim {total}")
        object.__setattr__(self, "sigs", sigs)
        object.__setattr__(self, "payoffs", payoffs)

    @property
    def players(self) -> int:
        return len(self.sigs)

    @property
    def joint_dim(self) -> int:
        return math.prod(s.total_dim for s in self.sigs)


@dataclass(frozen=True)
class StrategyProfile:
    strategies: tuple[StrategyMatrix, ...]

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        for s in self.strategies:
            rep = check_strategy(s.q, s.sig)
            if not rep.passes(1e-5):
                raise QnashError(f"profile entry out of tolerance: {rep}")

    def __iter__(self):
        return iter(self.strategies)

    def __len__(self):
        return len(self.strategies)

    def __getitem__(self, k):
        return self.strategies[k]


@dataclass(frozen=True)
class NashCertificate:
    """Result of checking a profile against unilateral deviations.

    gaps[k] is the best-response value minus the achieved payoff of player
    k; the certificate is valid when no gap exceeds epsilon (plus the
    numerical tolerance used when certifying).
    """

    epsilon: float
    gaps: tuple[float, ...]
    best_values: tuple[float, ...]
    payoffs: tuple[float, ...]
    tol: float = 0.0

    def __post_init__(self):
        if any(g < -1e-6 for g in self.gaps):
            raise QnashError(f"negative deviation gap: {self.gaps}")

    @property
    def max_gap(self) -> float:
        return max(self.gaps)

    @property
    def valid(self) -> bool:
        return self.max_gap <= self.epsilon + self.tol


def _check_profile(game: QuantumGame, profile: Sequence[StrategyMatrix]):
    if len(profile) != game.players:
        raise DimensionMismatchError("profile size does not match player count")
    for s, sig in zip(profile, game.sigs):
        if s.sig != sig:
            raise DimensionMismatchError(
                f"profile signature {s.sig} does not match game signature {sig}")


def xi_matrix(game: QuantumGame, mats: Sequence[MatrixLike], k: int) -> np.ndarray:
    """Effective payoff observable for player k, given the other players'
    matrices (entry k of ``mats`` is ignored).

    Contracts the payoff operator against everyone else's matrix by index
    remapping; no permutation matrices are materialized.
    """
    m = game.players
    dims = [s.total_dim for s in game.sigs]
    h = game.payoffs[k].mat.reshape(dims + dims)
    # row axes 0..m-1, column axes m..2m-1
    operands = [h, list(range(2 * m))]
    for j in range(m):
        if j == k:
            continue
        # sum_j Q_j[col_j, row_j] H[..row_j.., ..col_j..]
        operands.append(as_array(mats[j]))
        operands.append([m + j, j])
    out = np.einsum(*operands, [k, m + k])
    return 0.5 * (out + out.conj().T)


def xi(game: QuantumGame, profile: StrategyProfile | Sequence[StrategyMatrix],
       k: int) -> HermitianMatrix:
    """Public wrapper of :func:`xi_matrix` with profile validation."""
    _check_profile(game, list(profile))
    return HermitianMatrix(xi_matrix(game, [s.q for s in profile], k))


def expected_payoff(game: QuantumGame,
                    profile: StrategyProfile | Sequence[StrategyMatrix],
                    k: int) -> float:
    prof = list(profile)
    _check_profile(game, prof)
    xik = xi_matrix(game, [s.q for s in prof], k)
    return float(np.vdot(xik, prof[k].mat).real)


# ---------------------------------------------------------------------------
# best response


def _ascend_linear(a: np.ndarray, sig: StrategySignature, tol: float,
                   max_iter: int, proj_tol: float) -> np.ndarray:
    """Maximize <A, x> over the normalized strategy set by projected ascent.

    Projecting x + eta*A never decreases the linear objective, for any step
    size.  Three phases: diminishing steps c/sqrt(t), then constant steps
    until the iterate stalls (fixed points of the constant-step iteration
    are exact maximizers), then a polish with growing steps, whose residual
    optimality gap is O(diam^2 / eta) independently of |A|.  The polish
    stops early if the far-point projection stops converging, keeping the
    last feasible iterate; the value is monotone throughout.
    """
    n = sig.total_dim
    scale = max(float(np.abs(a).max()), 1e-30)
    x = np.eye(n, dtype=complex) / n
    val = float(np.vdot(a, x).real)
    c = 2.0 / scale
    spent = 0
    stall = 0
    for t in range(1, max(max_iter // 10, 20) + 1):
        x = as_array(project_to_set(x + (c / math.sqrt(t)) * a, sig,
                                    cone=False, tol=proj_tol))
        spent += 1
        new = float(np.vdot(a, x).real)
        stall = stall + 1 if new - val <= tol * 1e-3 else 0
        val = new
        if stall >= 10:
            break
    stall = 0
    while spent < max_iter:
        x = as_array(project_to_set(x + c * a, sig, cone=False, tol=proj_tol))
        spent += 1
        new = float(np.vdot(a, x).real)
        stall = stall + 1 if new - val <= tol * 1e-3 else 0
        val = new
        if stall >= 25:
            break
    eta = 4.0 / scale
    eta_max = max(4e6, eta)
    while True:
        try:
            x = as_array(project_to_set(x + eta * a, sig, cone=False,
                                        tol=proj_tol, max_iter=5000))
        except ConvergenceError:
            break
        if eta >= eta_max:
            break
        eta = min(eta * 8.0, eta_max)
    # far-point projections stop at a scale-dependent tolerance; a final
    # pass from the near-feasible iterate restores strict membership
    return as_array(project_to_set(x, sig, cone=False, tol=min(proj_tol, 1e-10)))


def best_response(game: QuantumGame,
                  profile: StrategyProfile | Sequence[StrategyMatrix], k: int,
                  tol: float = 1e-6, max_iter: int = 5000,
                  proj_tol: float = 1e-9) -> tuple[float, StrategyMatrix]:
    """Supremum of player k's payoff over their strategy set, with a
    maximizing strategy."""
    prof = list(profile)
    _check_profile(game, prof)
    a = xi_matrix(game, [s.q for s in prof], k)
    sig = game.sigs[k]
    x = _ascend_linear(a, sig, tol, max_iter, proj_tol)
    d_k = sig.input_dim
    value = d_k * float(np.vdot(a, x).real)
    r = StrategyMatrix(sig, HermitianMatrix(d_k * x))
    return value, r


def certify(game: QuantumGame,
            profile: StrategyProfile | Sequence[StrategyMatrix],
            epsilon: float, tol: float = 1e-6,
            max_iter: int = 5000) -> NashCertificate:
    """Check the no-profitable-deviation condition for every player."""
    prof = list(profile)
    _check_profile(game, prof)
    gaps, bests, pays = [], [], []
    for k in range(game.players):
        value, _ = best_response(game, prof, k, tol=tol, max_iter=max_iter)
        pay = expected_payoff(game, prof, k)
        bests.append(value)
        pays.append(pay)
        gaps.append(value - pay)
    return NashCertificate(epsilon=epsilon, gaps=tuple(gaps),
                           best_values=tuple(bests), payoffs=tuple(pays),
                           tol=tol)


# ---------------------------------------------------------------------------
# game constructors


def embed_classical(tables: Sequence[np.ndarray]) -> QuantumGame:
    """A normal-form classical game as a quantum game.

    Players prepare states measured in the standard basis, so each payoff
    operator is diagonal with the payoff table read off along the joint
    standard basis (player 1's action is the most significant index).
    """
    arrs = [np.asarray(t, dtype=float) for t in tables]
    m = len(arrs)
    if m == 0:
        raise DimensionMismatchError("need at least one payoff table")
    shape = arrs[0].shape
    if len(shape) != m or any(a.shape != shape for a in arrs):
        raise DimensionMismatchError(
            f"expected {m} tables of shape (a_1, ..., a_m), got {[a.shape for a in arrs]}")
    sigs = tuple(StrategySignature.state_preparation(nk) for nk in shape)
    payoffs = tuple(HermitianMatrix(np.diag(a.reshape(-1)).astype(complex))
                    for a in arrs)
    return QuantumGame(sigs, payoffs)


def payoffs_from_referee(povm: Sequence[MatrixLike],
                         values: Sequence[Sequence[float]],
                         sigs: Sequence[StrategySignature]) -> QuantumGame:
    """Game defined by a referee measurement and per-player payoff values
    (non-interactive form: one effect operator per outcome)."""
    effects = [as_array(e) for e in povm]
    if not effects:
        raise QnashError("empty measurement")
    total = sum(effects)
    if np.abs(total - np.eye(effects[0].shape[0])).max() > 1e-8:
        raise QnashError("effect operators do not sum to the identity")
    for vk in values:
        if len(vk) != len(effects):
            raise DimensionMismatchError("one payoff value per outcome required")
    payoffs = []
    for vk in values:
        h = sum(float(v) * e for v, e in zip(vk, effects))
        payoffs.append(HermitianMatrix(h))
    return QuantumGame(tuple(sigs), tuple(payoffs))


def matching_pennies() -> QuantumGame:
    t = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return embed_classical([t, -t])


def prisoners_dilemma() -> QuantumGame:
    # rows: own action (cooperate, defect); defect strictly dominates
    t1 = np.array([[3.0, 0.0], [5.0, 1.0]])
    return embed_classical([t1, t1.T])
