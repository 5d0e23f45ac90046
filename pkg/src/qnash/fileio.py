"""File formats: matrices, signatures, strategies, profiles, games.

A matrix file is a bare JSON array of rows, each entry a two-element
[re, im] array; the dimension is inferred and ragged rows are rejected.
Composite documents (games, profiles, reports) carry a "format": 1 field.
Floats are normalized to 17 significant digits before writing, so outputs
are byte-stable for identical inputs.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .errors import FormatError
from .game import QuantumGame, StrategyProfile, embed_classical
from .linalg import HermitianMatrix
from .strategies import StrategyMatrix, StrategySignature

FORMAT_VERSION = 1


def _f17(x: float) -> float:
    return float(f"{float(x):.17g}")


def normalize_floats(obj: Any) -> Any:
    """Round every float in a JSON-ready structure to 17 significant digits."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return _f17(obj)
    if isinstance(obj, (int, str)) or obj is None:
        return obj
    if isinstance(obj, dict):
        return {k: normalize_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize_floats(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _f17(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    raise FormatError(f"cannot serialize value of type {type(obj)!r}")


def dumps(obj: Any) -> str:
    return json.dumps(normalize_floats(obj), sort_keys=True, indent=2) + "\n"


def matrix_to_jsonable(mat: np.ndarray) -> list:
    return [[[_f17(v.real), _f17(v.imag)] for v in row] for row in np.asarray(mat, dtype=complex)]


def parse_matrix(data: Any) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise FormatError("matrix must be a nonempty JSON array of rows")
    dim = len(data)
    out = np.zeros((dim, dim), dtype=complex)
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != dim:
            raise FormatError(f"row {i} has length {len(row) if isinstance(row, list) else 'n/a'}, "
                              f"expected {dim} (ragged or non-square)")
        for j, entry in enumerate(row):
            if (not isinstance(entry, list) or len(entry) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)):
                raise FormatError(f"entry ({i},{j}) must be a [re, im] pair")
            out[i, j] = complex(entry[0], entry[1])
    return out


def vector_to_jsonable(vec: np.ndarray) -> list:
    return [_f17(v) for v in np.asarray(vec, dtype=float)]


def parse_vector(data: Any) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in data):
        raise FormatError("vector must be a nonempty JSON array of numbers")
    return np.asarray(data, dtype=float)


def signature_to_jsonable(sig: StrategySignature) -> dict:
    return {"in_dims": list(sig.in_dims), "out_dims": list(sig.out_dims)}


def parse_signature(data: Any) -> StrategySignature:
    if not isinstance(data, dict) or "in_dims" not in data or "out_dims" not in data:
        raise FormatError('signature must be an object with "in_dims" and "out_dims"')
    ins, outs = data["in_dims"], data["out_dims"]
    if (not isinstance(ins, list) or not isinstance(outs, list)
            or not all(isinstance(d, int) and not isinstance(d, bool) for d in ins + outs)):
        raise FormatError("signature dims must be integer lists")
    return StrategySignature(tuple(ins), tuple(outs))


def strategy_to_jsonable(s: StrategyMatrix) -> dict:
    return {"signature": signature_to_jsonable(s.sig),
            "matrix": matrix_to_jsonable(s.mat)}


def parse_strategy(data: Any) -> StrategyMatrix:
    if not isinstance(data, dict) or "signature" not in data or "matrix" not in data:
        raise FormatError('strategy must be an object with "signature" and "matrix"')
    sig = parse_signature(data["signature"])
    return StrategyMatrix(sig, HermitianMatrix(parse_matrix(data["matrix"])))


def profile_to_jsonable(profile: StrategyProfile) -> dict:
    return {"format": FORMAT_VERSION,
            "strategies": [strategy_to_jsonable(s) for s in profile]}


def parse_profile(data: Any) -> StrategyProfile:
    if not isinstance(data, dict) or "strategies" not in data:
        raise FormatError('profile must be an object with a "strategies" list')
    if not isinstance(data["strategies"], list) or not data["strategies"]:
        raise FormatError("profile needs at least one strategy")
    return StrategyProfile(tuple(parse_strategy(s) for s in data["strategies"]))


def game_to_jsonable(game: QuantumGame) -> dict:
    return {
        "format": FORMAT_VERSION,
        "players": game.players,
        "signatures": [signature_to_jsonable(s) for s in game.sigs],
        "payoffs": [matrix_to_jsonable(p.mat) for p in game.payoffs],
    }


def parse_game(data: Any) -> QuantumGame:
    if not isinstance(data, dict):
        raise FormatError("game file must be a JSON object")
    if "tables" in data:
        tables = data["tables"]
        if not isinstance(tables, list) or not tables:
            raise FormatError('"tables" must be a nonempty list of payoff arrays')
        return embed_classical([np.asarray(t, dtype=float) for t in tables])
    for key in ("players", "signatures", "payoffs"):
        if key not in data:
            raise FormatError(f'game file is missing "{key}"')
    sigs = tuple(parse_signature(s) for s in data["signatures"])
    if len(sigs) != data["players"]:
        raise FormatError("player count disagrees with the signature list")
    payoffs = tuple(HermitianMatrix(parse_matrix(p)) for p in data["payoffs"])
    return QuantumGame(sigs, payoffs)


def load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
