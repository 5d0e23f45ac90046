"""Command-line interface.

All commands read and write JSON, print a report to standard output, and
are deterministic for a fixed seed.  Output files are only written after
the computation finishes, so failures never leave partial files behind.

Exit codes: 0 success / valid certificate; 1 invalid certificate;
2 parse or input error; 3 dimension mismatch; 4 iteration budget exhausted
without reaching the target; 5 refused resource budget.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import fileio
from .config import BUDGET
from .errors import (BudgetExceededError, ConvergenceError,
                     DimensionMismatchError, FormatError, QnashError)
from .gain import GainConfig, iterate_gain, lemma_epsilon, profile_from_state
from .game import best_response, certify
from .linalg import DensityMatrix, HermitianMatrix
from .reduction import DensityMapProblem, density_fixed_point, solve_game_via_reduction
from .simplex import bary_approx, diameter_bound, find_fixed_point
from .strategies import StrategyMatrix, check_strategy, project_to_set
from .wigner import build_basis, psi, psi_inv

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_DIMENSION = 3
EXIT_NO_TARGET = 4
EXIT_BUDGET = 5


def _workers(requested: int | None) -> int:
    cap = os.environ.get("QNASH_THREADS")
    w = 1 if requested is None else max(1, requested)
    if cap is not None:
        try:
            w = min(w, max(1, int(cap)))
        except ValueError:
            raise FormatError(f"QNASH_THREADS={cap!r} is not an integer")
    return w


def _print(report: dict):
    sys.stdout.write(fileio.dumps({"format": fileio.FORMAT_VERSION, **report}))


def cmd_certify(args) -> int:
    game = fileio.parse_game(fileio.load_json(args.game))
    profile = fileio.parse_profile(fileio.load_json(args.profile))
    cert = certify(game, profile, args.epsilon, tol=args.tol,
                   max_iter=args.max_iter)
    _print({
        "epsilon": cert.epsilon,
        "valid": cert.valid,
        "gaps": list(cert.gaps),
        "best_response_values": list(cert.best_values),
        "expected_payoffs": list(cert.payoffs),
        "max_gap": cert.max_gap,
    })
    return EXIT_OK if cert.valid else EXIT_INVALID


def cmd_solve_gain(args) -> int:
    game = fileio.parse_game(fileio.load_json(args.game))
    cfg = GainConfig(max_iter=args.max_iter, damping=args.damping,
                     restarts=args.restarts, target_residual=args.target)
    rng = np.random.default_rng(args.seed)
    trace = iterate_gain(game, cfg=cfg, rng=rng)
    profile = profile_from_state(trace.best, game.sigs)
    cert = certify(game, profile, args.epsilon)
    report = {
        "seed": args.seed,
        "residual": trace.best.residual,
        "iterations": trace.iterations,
        "met_residual_target": trace.met_target,
        "per_player_gaps": list(cert.gaps),
        "certified_epsilon": max(cert.max_gap, 0.0),
        "lemma_epsilon": lemma_epsilon(game, [d.mat for d in trace.best.densities], cfg),
    }
    out = fileio.dumps(fileio.profile_to_jsonable(profile))
    if args.out:
        fileio.write_text(args.out, out)
    _print(report)
    return EXIT_OK if trace.met_target else EXIT_NO_TARGET


def cmd_best_response(args) -> int:
    game = fileio.parse_game(fileio.load_json(args.game))
    profile = fileio.parse_profile(fileio.load_json(args.profile))
    value, strat = best_response(game, profile, args.player, tol=args.tol,
                                 max_iter=args.max_iter)
    from .game import expected_payoff
    current = expected_payoff(game, profile, args.player)
    if args.out:
        fileio.write_text(args.out, fileio.dumps(fileio.strategy_to_jsonable(strat)))
    _print({"player": args.player, "value": value, "current_payoff": current,
            "gap": value - current})
    return EXIT_OK


def cmd_project(args) -> int:
    sig = fileio.parse_signature(fileio.load_json(args.signature))
    mat = fileio.parse_matrix(fileio.load_json(args.matrix))
    out = project_to_set(HermitianMatrix(mat), sig, cone=args.cone,
                         tol=args.tol, max_iter=args.max_iter)
    scaled = out.mat if args.cone else sig.input_dim * out.mat
    report_obj = check_strategy(HermitianMatrix(scaled), sig) if not args.cone else None
    if args.out:
        fileio.write_text(args.out, fileio.dumps(fileio.matrix_to_jsonable(out.mat)))
    _print({
        "cone": args.cone,
        "distance": float(np.linalg.norm(out.mat - mat)),
        "rescaled_chain_residuals": list(report_obj.level_residuals) if report_obj else None,
        "rescaled_trace_residual": report_obj.trace_residual if report_obj else None,
    })
    return EXIT_OK


def cmd_wigner(args) -> int:
    basis = build_basis(args.n)
    data = fileio.load_json(args.input)
    if args.action == "psi":
        mat = fileio.parse_matrix(data)
        vec = psi(HermitianMatrix(mat), basis)
        if args.out:
            fileio.write_text(args.out, fileio.dumps(fileio.vector_to_jsonable(vec)))
        _print({"n": args.n, "vector": fileio.vector_to_jsonable(vec),
                "sum": float(vec.sum())})
    elif args.action == "inv":
        vec = fileio.parse_vector(data)
        mat = psi_inv(vec, basis)
        lo = float(np.linalg.eigvalsh(mat.mat)[0])
        if args.out:
            fileio.write_text(args.out, fileio.dumps(fileio.matrix_to_jsonable(mat.mat)))
        _print({"n": args.n, "matrix": fileio.matrix_to_jsonable(mat.mat),
                "min_eigenvalue": lo, "is_density": lo >= -1e-9})
    else:  # roundtrip
        mat = fileio.parse_matrix(data)
        back = psi_inv(psi(HermitianMatrix(mat), basis), basis)
        dev = float(np.abs(back.mat - mat).max())
        _print({"n": args.n, "max_deviation": dev})
    return EXIT_OK


_BUILTIN_MAPS = {
    "identity": lambda n: (lambda v: v),
    "constant": lambda n: (lambda v: np.ones(n) / n),
    "contract": lambda n: (lambda v: (v + np.ones(n) / n) / 2.0),
    "rotate": lambda n: (lambda v: np.roll(v, 1)),
}


def _table_map(path: str, n: int):
    entries = fileio.load_json(path)
    if not isinstance(entries, list):
        raise FormatError("vertex table must be a JSON list of "
                          '{"vertex": [...], "value": [...]} entries')
    table = [(np.asarray(e["vertex"], dtype=float), np.asarray(e["value"], dtype=float))
             for e in entries]

    def f(v: np.ndarray) -> np.ndarray:
        for vert, val in table:
            if len(vert) == len(v) and np.abs(vert - v).max() <= 1e-12:
                return val
        raise FormatError(f"vertex table has no entry for {v.tolist()}")

    return f


def cmd_fixpoint(args) -> int:
    n = args.n
    if args.table:
        f = _table_map(args.table, n)
    else:
        f = _BUILTIN_MAPS[args.f](n)
    result = find_fixed_point(f, n, args.r, max_cells=args.budget,
                              workers=_workers(args.workers))
    _print({
        "n": n,
        "r": args.r,
        "function": args.f if not args.table else "table",
        "point": fileio.vector_to_jsonable(result.point.as_floats()),
        "weights": fileio.vector_to_jsonable(np.array([float(w) for w in result.weights])),
        "residual": result.residual,
        "cells_scanned": result.cells_scanned,
        "diameter_bound": diameter_bound(n, args.r),
    })
    return EXIT_OK


_BUILTIN_PROBLEMS = {
    "const-mixed": lambda n: (lambda t: (DensityMatrix.maximally_mixed(n),), 0.001),
    "contract-mixed": lambda n: (
        lambda t: (DensityMatrix(HermitianMatrix(
            (t[0].mat + np.eye(n) / n) / 2.0)),), 0.5),
    "identity": lambda n: (lambda t: t, 1.0),
}


def cmd_reduce(args) -> int:
    n = args.n
    f, lip = _BUILTIN_PROBLEMS[args.problem](n)
    problem = DensityMapProblem((n,), f, lipschitz=lip, target_eps=args.epsilon)
    report = density_fixed_point(problem, r=args.r, max_cells=args.budget,
                                 workers=_workers(args.workers))
    _print({
        "problem": args.problem,
        "n": n,
        "r": args.r,
        "simplex_dim": report.simplex_dim,
        "simplex_residual": report.simplex_residual,
        "diameter_bound": diameter_bound(report.simplex_dim, args.r),
        "f_residual": report.f_residual,
        "cells_scanned": report.cells_scanned,
        "rho": fileio.matrix_to_jsonable(report.rho.mat),
    })
    return EXIT_OK


def cmd_solve_reduction(args) -> int:
    game = fileio.parse_game(fileio.load_json(args.game))
    report = solve_game_via_reduction(game, epsilon=args.epsilon, r=args.r,
                                      max_cells=args.budget,
                                      workers=_workers(args.workers))
    if args.out:
        fileio.write_text(args.out, fileio.dumps(
            fileio.profile_to_jsonable(report.profile)))
    _print({
        "method": report.method,
        "requested_epsilon": report.requested_epsilon,
        "achieved_epsilon": report.achieved_epsilon,
        "met_target": report.met_target,
        "gaps": list(report.certificate.gaps),
        "pipeline": None if report.pipeline is None else {
            "simplex_dim": report.pipeline.simplex_dim,
            "level": report.pipeline.level,
            "simplex_residual": report.pipeline.simplex_residual,
            "diameter_bound": report.pipeline.diameter,
            "f_residual": report.pipeline.f_residual,
            "cells_scanned": report.pipeline.cells_scanned,
        },
    })
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qnash", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol=1e-6, max_iter=5000):
        sp.add_argument("--tol", type=float, default=tol)
        sp.add_argument("--max-iter", type=int, default=max_iter)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("certify", help="check a profile against deviations")
    sp.add_argument("game")
    sp.add_argument("profile")
    sp.add_argument("--epsilon", type=float, required=True)
    common(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("solve-gain", help="damped gain iteration")
    sp.add_argument("game")
    sp.add_argument("--out", help="profile output file")
    sp.add_argument("--epsilon", type=float, default=1e-3)
    sp.add_argument("--target", type=float, default=1e-6,
                    help="residual target")
    sp.add_argument("--damping", type=float, default=0.5)
    sp.add_argument("--restarts", type=int, default=3)
    common(sp, max_iter=2000)
    sp.set_defaults(func=cmd_solve_gain)

    sp = sub.add_parser("best-response", help="optimal deviation for one player")
    sp.add_argument("game")
    sp.add_argument("profile")
    sp.add_argument("--player", type=int, required=True)
    sp.add_argument("--out", help="strategy output file")
    common(sp)
    sp.set_defaults(func=cmd_best_response)

    sp = sub.add_parser("project", help="project a matrix onto a strategy set")
    sp.add_argument("matrix")
    sp.add_argument("--signature", required=True)
    sp.add_argument("--cone", action="store_true")
    sp.add_argument("--out")
    common(sp, tol=1e-7, max_iter=20000)
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("wigner", help="Wigner coordinate maps")
    sp.add_argument("action", choices=["psi", "inv", "roundtrip"])
    sp.add_argument("input")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_wigner)

    sp = sub.add_parser("fixpoint", help="exact barycentric fixed point")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--f", choices=sorted(_BUILTIN_MAPS), default="identity")
    sp.add_argument("--table", help="vertex-value table file")
    sp.add_argument("--budget", type=int, default=None,
                    help=f"cell budget (default {BUDGET.max_cells})")
    sp.add_argument("--workers", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_fixpoint)

    sp = sub.add_parser("reduce", help="density fixed point via the pipeline")
    sp.add_argument("--problem", choices=sorted(_BUILTIN_PROBLEMS),
                    default="const-mixed")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--epsilon", type=float, default=1e-6)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("solve-reduction", help="solve a game via the pipeline")
    sp.add_argument("game")
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--out")
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_solve_reduction)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DimensionMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_TARGET
    except QnashError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
