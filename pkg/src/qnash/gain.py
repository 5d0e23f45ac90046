"""The gain function on tuples of density operators, and its iteration.

For each player the current density is projected onto the normalized
strategy set, the positive part of that player's payoff advantage is
projected onto the strategy cone, added, and the sum renormalized.  Fixed
points on the strategy sets are Nash equilibria, and any point with a small
gain residual converts into an explicit epsilon-guarantee via
:func:`deviation_bound`.

Plain iteration of the gain map need not converge, so the solver applies
damping and optional random restarts and reports the best residual seen;
certification of whatever point is reached is always available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import QnashError
from .game import QuantumGame, StrategyProfile, xi_matrix
from .linalg import DensityMatrix, HermitianMatrix, MatrixLike, as_array
from .strategies import StrategyMatrix, StrategySignature, project_to_set


@dataclass(frozen=True)
class GainConfig:
    projection_tol: float = 1e-10
    projection_max_iter: int = 20000
    max_iter: int = 5000
    damping: float = 0.5
    restarts: int = 3
    target_residual: float = 1e-6

    def __post_init__(self):
        if not (0.0 < self.damping <= 1.0):
            raise QnashError(f"damping must lie in (0, 1], got {self.damping}")
        if self.projection_tol <= 0 or self.target_residual <= 0:
            raise QnashError("tolerances must be positive")


@dataclass(frozen=True)
class GainState:
    """One point of the iteration: densities and their gain residual."""

    densities: tuple[DensityMatrix, ...]
    residual: float


@dataclass(frozen=True)
class GainStepInfo:
    """Intermediate quantities of one gain evaluation (arrays, by player)."""

    sigmas: tuple[np.ndarray, ...]       # projections onto the strategy sets
    xis: tuple[np.ndarray, ...]          # effective payoff observables at sigma
    alphas: tuple[float, ...]            # current payoffs <xi_k, sigma_k>
    cone_parts: tuple[np.ndarray, ...]   # P_k, the cone-projected advantage
    outputs: tuple[np.ndarray, ...]      # (sigma_k + P_k) / (1 + Tr P_k)

    @property
    def cone_traces(self) -> tuple[float, ...]:
        return tuple(float(np.trace(p).real) for p in self.cone_parts)

    @property
    def per_player_residuals(self) -> tuple[float, ...]:
        return tuple(float(np.linalg.norm(g - s))
                     for g, s in zip(self.outputs, self.sigmas))


def gain_step(game: QuantumGame, densities: Sequence[MatrixLike],
              cfg: GainConfig = GainConfig()) -> GainStepInfo:
    """Evaluate the gain map, exposing every intermediate quantity."""
    if len(densities) != game.players:
        raise QnashError("one density per player required")
    rhos = [as_array(d) for d in densities]
    sigmas, xis, alphas, cones, outs = [], [], [], [], []
    for k, sig in enumerate(game.sigs):
        sigmas.append(as_array(project_to_set(
            rhos[k], sig, cone=False, tol=cfg.projection_tol,
            max_iter=cfg.projection_max_iter)))
    for k, sig in enumerate(game.sigs):
        a = xi_matrix(game, sigmas, k)
        alpha = float(np.vdot(a, sigmas[k]).real)
        n_k = sig.total_dim
        p = as_array(project_to_set(
            a - alpha * np.eye(n_k), sig, cone=True, tol=cfg.projection_tol,
            max_iter=cfg.projection_max_iter))
        out = (sigmas[k] + p) / (1.0 + float(np.trace(p).real))
        xis.append(a)
        alphas.append(alpha)
        cones.append(p)
        outs.append(out)
    return GainStepInfo(tuple(sigmas), tuple(xis), tuple(alphas),
                        tuple(cones), tuple(outs))


def gain_map(game: QuantumGame, densities: Sequence[MatrixLike],
             cfg: GainConfig = GainConfig()) -> list[DensityMatrix]:
    """The gain map itself: improved density tuple."""
    info = gain_step(game, densities, cfg)
    return [DensityMatrix(HermitianMatrix(g)) for g in info.outputs]


def _residual(outs: Sequence[np.ndarray], rhos: Sequence[np.ndarray]) -> float:
    return math.sqrt(sum(float(np.linalg.norm(g - r)) ** 2
                         for g, r in zip(outs, rhos)))


@dataclass(frozen=True)
class GainTrace:
    """History of one damped iteration run (including restarts)."""

    states: tuple[GainState, ...]
    best: GainState
    met_target: bool
    iterations: int


def default_init(game: QuantumGame, cfg: GainConfig = GainConfig()) -> list[DensityMatrix]:
    """Maximally mixed densities, projected into the strategy sets."""
    inits = []
    for sig in game.sigs:
        n = sig.total_dim
        x = as_array(project_to_set(np.eye(n, dtype=complex) / n, sig,
                                    cone=False, tol=cfg.projection_tol))
        inits.append(DensityMatrix(HermitianMatrix(x)))
    return inits


def _random_init(game: QuantumGame, rng: np.random.Generator,
                 cfg: GainConfig) -> list[DensityMatrix]:
    inits = []
    for sig in game.sigs:
        n = sig.total_dim
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        p = a @ a.conj().T
        x = as_array(project_to_set(p / np.trace(p).real, sig, cone=False,
                                    tol=cfg.projection_tol))
        inits.append(DensityMatrix(HermitianMatrix(x)))
    return inits


def iterate_gain(game: QuantumGame,
                 init: Sequence[DensityMatrix] | None = None,
                 cfg: GainConfig = GainConfig(),
                 rng: np.random.Generator | None = None) -> GainTrace:
    """Damped iteration of the gain map with restarts.

    Never raises on a missed target: the best-residual state is returned
    with ``met_target`` False, since any residual still certifies some
    epsilon via the deviation bound.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    states: list[GainState] = []
    best: GainState | None = None
    total = 0
    met = False
    for attempt in range(cfg.restarts + 1):
        if attempt == 0:
            rhos = [d.mat for d in (init if init is not None else default_init(game, cfg))]
        else:
            rhos = [d.mat for d in _random_init(game, rng, cfg)]
        for _ in range(cfg.max_iter):
            info = gain_step(game, rhos, cfg)
            res = _residual(info.outputs, rhos)
            state = GainState(
                tuple(DensityMatrix(HermitianMatrix(r)) for r in rhos), res)
            states.append(state)
            total += 1
            if best is None or res < best.residual:
                best = state
            if res <= cfg.target_residual:
                met = True
                break
            lam = cfg.damping
            rhos = [(1.0 - lam) * r + lam * g for r, g in zip(rhos, info.outputs)]
        if met:
            break
    return GainTrace(tuple(states), best, met, total)


def deviation_bound(eta: float, n: int, a_norm: float) -> float:
    """Payoff deviation certified by a gain residual of eta:
    (1 + 3 n |A|)^2 sqrt(eta)."""
    if eta < 0 or n < 1 or a_norm < 0:
        raise QnashError("deviation_bound needs eta >= 0, n >= 1, a_norm >= 0")
    return (1.0 + 3.0 * n * a_norm) ** 2 * math.sqrt(eta)


def lemma_epsilon(game: QuantumGame, densities: Sequence[MatrixLike],
                  cfg: GainConfig = GainConfig()) -> float:
    """Total epsilon certified at a density tuple by the per-player
    deviation bounds, after rescaling to actual strategies."""
    info = gain_step(game, densities, cfg)
    d_prod = math.prod(sig.input_dim for sig in game.sigs)
    eps = 0.0
    for k, sig in enumerate(game.sigs):
        eta_k = info.per_player_residuals[k]
        a_norm = float(np.abs(np.linalg.eigvalsh(info.xis[k])).max())
        eps += d_prod * deviation_bound(eta_k, sig.total_dim, a_norm)
    return eps


def profile_from_state(state: GainState | Sequence[MatrixLike],
                       sigs: Sequence[StrategySignature],
                       proj_tol: float = 1e-11) -> StrategyProfile:
    """Rescale a density tuple to a strategy profile (trace d_k each),
    after a final projection into the strategy sets."""
    densities = state.densities if isinstance(state, GainState) else state
    if len(densities) != len(sigs):
        raise QnashError("one density per signature required")
    strategies = []
    for d, sig in zip(densities, sigs):
        x = as_array(project_to_set(as_array(d), sig, cone=False, tol=proj_tol))
        strategies.append(StrategyMatrix(sig, HermitianMatrix(sig.input_dim * x)))
    return StrategyProfile(tuple(strategies))
