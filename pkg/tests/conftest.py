"""Shared helpers and independent oracles for the test suite.

The oracles deliberately avoid the library's own projection/contraction
code paths: affine projections are solved from explicitly probed
constraint matrices, full set projections by penalized L-BFGS over a real
parameterization, and classical game values by direct enumeration.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.optimize

from qnash import (DensityMatrix, HermitianMatrix, StrategyMatrix,
                   StrategyProfile, StrategySignature)


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)


def state_strategy(rho: np.ndarray) -> StrategyMatrix:
    sig = StrategySignature.state_preparation(rho.shape[0])
    return StrategyMatrix(sig, HermitianMatrix(rho))


def state_profile(*rhos: np.ndarray) -> StrategyProfile:
    return StrategyProfile(tuple(state_strategy(r) for r in rhos))


def random_povm(dim: int, outcomes: int, rng: np.random.Generator) -> list[np.ndarray]:
    """S^-1/2 A_a S^-1/2 for random PSD A_a: a valid measurement."""
    mats = []
    for _ in range(outcomes):
        x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        mats.append(x @ x.conj().T)
    s = sum(mats)
    w, v = np.linalg.eigh(s)
    isq = (v / np.sqrt(w)) @ v.conj().T
    return [isq @ m @ isq for m in mats]


# ---------------------------------------------------------------------------
# real parameterization of Hermitian matrices (for the oracles)


def herm_basis_size(n: int) -> int:
    return n * n


def herm_from_params(v: np.ndarray, n: int) -> np.ndarray:
    iu = np.triu_indices(n, 1)
    k = len(iu[0])
    m = np.zeros((n, n), dtype=complex)
    m[np.diag_indices(n)] = v[:n]
    m[iu] = v[n:n + k] + 1j * v[n + k:]
    return m + np.triu(m, 1).conj().T


def herm_to_params(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    iu = np.triu_indices(n, 1)
    return np.concatenate([np.diag(m).real, m[iu].real, m[iu].imag])


# ---------------------------------------------------------------------------
# independent constraint matrices for the strategy chain


def _ptrace_ref(mat: np.ndarray, dims: list[int], keep: list[int]) -> np.ndarray:
    """Reference partial trace via explicit index loops (test-local)."""
    m = len(dims)
    keep = sorted(keep)
    kd = [dims[i] for i in keep]
    out = np.zeros((math.prod(kd), math.prod(kd)), dtype=complex)
    idx = list(np.ndindex(*dims))
    flat = {}
    for tup in idx:
        f = 0
        for i, d in zip(tup, dims):
            f = f * d + i
        flat[tup] = f
    kflat = {}
    for tup in np.ndindex(*kd):
        f = 0
        for i, d in zip(tup, kd):
            f = f * d + i
        kflat[tup] = f
    for row in idx:
        for col in idx:
            if all(row[i] == col[i] for i in range(m) if i not in keep):
                r = tuple(row[i] for i in keep)
                c = tuple(col[i] for i in keep)
                out[kflat[r], kflat[c]] += mat[flat[row], flat[col]]
    return out


def chain_residual_ref(x: np.ndarray, sig: StrategySignature, mode: str) -> float:
    """Reference residual of the affine chain, built from its definition."""
    r = sig.rounds
    cur = x
    worst = 0.0
    for j in range(r, 0, -1):
        dims = list(sig.out_dims[:j] + sig.in_dims[:j])
        tj = _ptrace_ref(cur, dims, [i for i in range(2 * j) if i != j - 1])
        dx = sig.in_dims[j - 1]
        k = tj.shape[0] // dx
        if j > 1:
            z = np.zeros((k, k), dtype=complex)
            resh = tj.reshape(k, dx, k, dx)
            for a in range(dx):
                z += resh[:, a, :, a]
            z /= dx
            worst = max(worst, float(np.linalg.norm(tj - np.kron(z, np.eye(dx)))))
            cur = z
        else:
            # the recursion has divided by every later input dimension, so
            # the bottom marginal of a strategy is exactly the identity
            if mode == "cone":
                c = np.trace(tj).real / dx
            elif mode == "normalized":
                c = 1.0 / math.prod(sig.in_dims)
            else:
                c = 1.0
            worst = max(worst, float(np.linalg.norm(tj - c * np.eye(dx))))
    return worst


def probe_affine_constraints(sig: StrategySignature, mode: str):
    """Constraint system A p = b over Hermitian parameters, probed entrywise.

    Characterizes the affine chain as the kernel of the per-level
    deviation maps (marginal minus its admissible part), evaluated on every
    real basis direction.
    """
    n = sig.total_dim
    dim_p = herm_basis_size(n)

    def deviations(x: np.ndarray) -> np.ndarray:
        r = sig.rounds
        cur = x
        outs = []
        for j in range(r, 0, -1):
            dims = list(sig.out_dims[:j] + sig.in_dims[:j])
            tj = _ptrace_ref(cur, dims, [i for i in range(2 * j) if i != j - 1])
            dx = sig.in_dims[j - 1]
            k = tj.shape[0] // dx
            if j > 1:
                resh = tj.reshape(k, dx, k, dx)
                z = sum(resh[:, a, :, a] for a in range(dx)) / dx
                outs.append((tj - np.kron(z, np.eye(dx))).reshape(-1))
                cur = z
            else:
                if mode == "cone":
                    c = np.trace(tj) / dx
                elif mode == "normalized":
                    c = 1.0 / math.prod(sig.in_dims)
                else:
                    c = 1.0
                outs.append((tj - c * np.eye(dx)).reshape(-1))
        v = np.concatenate(outs)
        return np.concatenate([v.real, v.imag])

    zero = deviations(np.zeros((n, n), dtype=complex))
    cols = []
    for i in range(dim_p):
        e = np.zeros(dim_p)
        e[i] = 1.0
        cols.append(deviations(herm_from_params(e, n)) - zero)
    a = np.array(cols).T
    return a, -zero


def affine_projection_oracle(h: np.ndarray, sig: StrategySignature,
                             mode: str) -> np.ndarray:
    """Least-squares projection onto the probed affine chain (KKT/pinv)."""
    a, b = probe_affine_constraints(sig, mode)
    p = herm_to_params(h)
    corr = np.linalg.pinv(a, rcond=1e-10) @ (a @ p - b)
    return herm_from_params(p - corr, sig.total_dim)


def penalized_projection_oracle(h: np.ndarray, sig: StrategySignature,
                                cone: bool) -> np.ndarray:
    """Projection onto the strategy set (or cone) by penalized L-BFGS."""
    n = sig.total_dim
    mode = "cone" if cone else "normalized"
    a, b = probe_affine_constraints(sig, mode)
    href = herm_to_params(h)

    def objective(p, mu):
        x = herm_from_params(p, n)
        w, u = np.linalg.eigh(x)
        wneg = np.minimum(w, 0.0)
        resid = a @ p - b
        val = float(np.linalg.norm(x - h) ** 2) + mu * (
            float(np.sum(wneg ** 2)) + float(resid @ resid))
        grad_mat = 2.0 * (x - h) + mu * 2.0 * (u * wneg) @ u.conj().T
        grad = herm_to_params(grad_mat)
        # parameter metric: off-diagonal params appear twice in the matrix,
        # so their Frobenius gradient needs the factor 2
        scale = np.ones_like(p)
        scale[n:] = 2.0
        grad = grad * scale + mu * 2.0 * (a.T @ resid)
        return val, grad

    p = href.copy()
    for mu in (1e2, 1e4, 1e6, 1e8, 1e10):
        res = scipy.optimize.minimize(
            objective, p, args=(mu,), jac=True, method="L-BFGS-B",
            options={"maxiter": 4000, "ftol": 1e-18, "gtol": 1e-14})
        p = res.x
    return herm_from_params(p, n)


def sample_feasible(sig: StrategySignature, rng: np.random.Generator,
                    count: int, seeds: int = 12) -> list[np.ndarray]:
    """Feasible points of the normalized strategy set: a few projections of
    random Hermitians, mixed by random convex weights (convexity keeps the
    samples feasible)."""
    from qnash import project_to_set, random_hermitian

    n = sig.total_dim
    base = [np.eye(n, dtype=complex) / n]
    for _ in range(seeds):
        h = random_hermitian(n, rng, scale=1.5)
        base.append(np.asarray(project_to_set(h, sig, tol=1e-10).mat))
    out = []
    for _ in range(count):
        w = rng.dirichlet(np.ones(len(base)))
        out.append(sum(wi * b for wi, b in zip(w, base)))
    return out


def classical_mixed_value(tables: list[np.ndarray],
                          mixed: list[np.ndarray], k: int) -> float:
    """Expected payoff of player k under mixed classical strategies."""
    value = 0.0
    for actions in np.ndindex(*tables[0].shape):
        prob = math.prod(m[a] for m, a in zip(mixed, actions))
        value += prob * tables[k][actions]
    return float(value)


def banach_fixed_point(f, x0: np.ndarray, iters: int = 2000) -> np.ndarray:
    x = x0
    for _ in range(iters):
        x = f(x)
    return x
