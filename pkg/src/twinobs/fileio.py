"""JSON file formats.

Complex numbers are ``[re, im]`` pairs; matrices are nested row-major
lists of them.  A state file is ``{"d1": .., "d2": .., "matrix": ..}`` on
the composite index ``i1 * d2 + i2``; an operator file is
``{"matrix": ..}``; a separable decomposition file is a list of
``{"w": .., "rho1": .., "rho2": ..}``.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .errors import InputError
from .linalg import BipartiteState
from .twins import SeparableDecomp


def matrix_from_json(data, name: str = "matrix") -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(row, list) for row in data):
        raise InputError(f"{name}: expected a nested list of rows")
    ncols = len(data[0])
    out = np.empty((len(data), ncols), dtype=complex)
    for i, row in enumerate(data):
        if len(row) != ncols:
            raise InputError(f"{name}: row {i} has {len(row)} entries, expected {ncols}")
        for j, z in enumerate(row):
            if isinstance(z, (int, float)) and not isinstance(z, bool):
                out[i, j] = z
            elif isinstance(z, list) and len(z) == 2 and all(isinstance(x, (int, float)) for x in z):
                out[i, j] = complex(z[0], z[1])
            else:
                raise InputError(f"{name}[{i}][{j}]: expected [re, im], got {z!r}")
    if not np.all(np.isfinite(out)):
        raise InputError(f"{name}: non-finite entries")
    return out


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[_num(z.real), _num(z.imag)] for z in row] for row in m]


def _num(x: float) -> float:
    x = float(x)
    return 0.0 if x == 0.0 else x


def read_json(path) -> tuple[object, bytes]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(raw), raw
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc


def digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def state_from_json(data, tol: float = 1e-8) -> BipartiteState:
    """Parse a state file body.  Positivity/trace failures raise ``NotAStateError``."""
    if not isinstance(data, dict) or not {"d1", "d2", "matrix"} <= data.keys():
        raise InputError("state file must be an object with keys d1, d2, matrix")
    d1, d2 = data["d1"], data["d2"]
    if not all(isinstance(d, int) and not isinstance(d, bool) and d > 0 for d in (d1, d2)):
        raise InputError("d1 and d2 must be positive integers")
    m = matrix_from_json(data["matrix"])
    if m.shape != (d1 * d2, d1 * d2):
        raise InputError(f"matrix is {m.shape[0]}x{m.shape[1]}, expected {d1 * d2}x{d1 * d2}")
    return BipartiteState(m, d1, d2, tol=tol)


def state_to_json(s: BipartiteState) -> dict:
    return {"d1": s.d1, "d2": s.d2, "matrix": matrix_to_json(s.rho)}


def operator_from_json(data) -> np.ndarray:
    if isinstance(data, dict):
        if "matrix" not in data:
            raise InputError("operator file must have a 'matrix' key")
        m = matrix_from_json(data["matrix"])
        if "dim" in data and m.shape != (data["dim"], data["dim"]):
            raise InputError(f"operator is {m.shape}, declared dim {data['dim']}")
    else:
        m = matrix_from_json(data)
    if m.shape[0] != m.shape[1]:
        raise InputError("operator must be square")
    return m


def decomposition_from_json(data, tol: float = 1e-8) -> SeparableDecomp:
    if not isinstance(data, list) or not data:
        raise InputError("decomposition file must be a non-empty list of {w, rho1, rho2}")
    terms = []
    for k, item in enumerate(data):
        if not isinstance(item, dict) or not {"w", "rho1", "rho2"} <= item.keys():
            raise InputError(f"term {k}: expected keys w, rho1, rho2")
        if not isinstance(item["w"], (int, float)):
            raise InputError(f"term {k}: w must be a number")
        terms.append((item["w"], matrix_from_json(item["rho1"], f"term {k} rho1"),
                      matrix_from_json(item["rho2"], f"term {k} rho2")))
    return SeparableDecomp(terms, tol=tol)


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and complex numbers for ``json.dumps``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj) and obj.ndim == 2:
            return matrix_to_json(obj)
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_num(obj.real), _num(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return _num(x)
    return obj
