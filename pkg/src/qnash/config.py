"""Central numerical tolerances and resource budgets.

Every float comparison threshold used by the library lives here, so the
whole artifact agrees on what "equal", "positive semidefinite" and
"converged" mean.  Individual operations take overrides where it makes
sense; these are the defaults.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # construction of Hermitian matrices: inputs are symmetrized, and
    # rejected outright if the anti-Hermitian part is this large
    herm_reject: float = 1e-6
    # density matrices: smallest admissible eigenvalue and trace slack
    density_eig: float = -1e-9
    density_trace: float = 1e-9
    # strategy matrices: PSD slack, constraint-chain residual, trace slack
    strategy_eig: float = -1e-8
    strategy_chain: float = 1e-6
    strategy_trace: float = 1e-6
    # normalize_psd rejects inputs whose smallest eigenvalue is below this
    psd_input_eig: float = -1e-6
    # alternating-projection (Dykstra) defaults
    projection_tol: float = 1e-7
    projection_max_iter: int = 20000
    # simplex fixed-point search
    fixed_point_residual: float = 1e-9
    weight_slack: float = 1e-12


@dataclass(frozen=True)
class Budgets:
    # refuse barycentric searches with more cells than this
    max_cells: int = 5_000_000
    # subdivision levels beyond this are refused by default (the exact
    # rational enumeration is only meant for desk-scale instances)
    max_level: int = 2


TOL = Tolerances()
BUDGET = Budgets()
