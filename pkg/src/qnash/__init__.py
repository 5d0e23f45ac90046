"""Quantum games in the strategies framework: representation, equilibrium
certification, the gain-function solver, and the discrete-Wigner /
barycentric fixed-point pipeline."""

from .config import BUDGET, TOL, Budgets, Tolerances
from .errors import (BudgetExceededError, ConvergenceError,
                     DimensionMismatchError, FormatError, QnashError)
from .gain import (GainConfig, GainState, GainTrace, deviation_bound,
                   gain_map, gain_step, iterate_gain, lemma_epsilon,
                   profile_from_state)
from .game import (NashCertificate, QuantumGame, StrategyProfile,
                   best_response, certify, embed_classical, expected_payoff,
                   matching_pennies, payoffs_from_referee, prisoners_dilemma,
                   xi, xi_matrix)
from .linalg import (DensityMatrix, FactorShape, HermitianMatrix, MatrixNorms,
                     hs_inner, normalize_psd, norms, partial_trace,
                     project_density, project_psd, project_simplex,
                     random_density, random_hermitian, random_unitary, tensor,
                     tensor_all)
from .reduction import (DensityMapProblem, GameSolveReport, PipelineReport,
                        block_embed, density_fixed_point, pad_to_odd,
                        solve_game_via_reduction, unpad)
from .simplex import (BarycentricCoords, FixedPointResult, SimplexPoint,
                      SubsimplexAddress, VertexCache, bary_approx, barycenter,
                      cell_count, diameter_bound, find_fixed_point, iter_cells,
                      level_vertices, locate, standard_vertices)
from .strategies import (ConstraintReport, StrategyMatrix, StrategySignature,
                         check_strategy, choi_of_channel, outcome_probability,
                         project_affine, project_to_set)
from .wigner import WignerBasis, build_basis, parity_operator, psi, psi_inv, weyl

__version__ = "0.1.0"
