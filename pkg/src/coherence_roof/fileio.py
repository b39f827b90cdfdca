"""JSON matrix files.

Two layouts are accepted::

    {"dim": 2, "entries": [[re, im], ...]}   # all dim*dim entries, row-major
    {"dim": 2, "upper":   [[re, im], ...]}   # diagonal + upper triangle, row-major

The second is completed to a Hermitian matrix.  A bare real number may
stand in for ``[re, 0]``.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    pass


def _number(item, where: str) -> complex:
    if isinstance(item, bool):
        raise ParseError(f"{where}: booleans are not numbers")
    if isinstance(item, (int, float)):
        return complex(float(item), 0.0)
    if (isinstance(item, (list, tuple)) and len(item) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in item)):
        return complex(float(item[0]), float(item[1]))
    raise ParseError(f"{where}: expected [re, im], got {item!r}")


def matrix_from_obj(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "dim" not in obj:
        raise ParseError("expected an object with a 'dim' field")
    d = obj["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ParseError(f"'dim' must be a positive integer, got {d!r}")
    if "entries" in obj:
        items = obj["entries"]
        if not isinstance(items, list) or len(items) != d * d:
            raise ParseError(f"'entries' must list dim^2 = {d * d} values")
        flat = [_number(v, f"entries[{i}]") for i, v in enumerate(items)]
        return np.array(flat, dtype=complex).reshape(d, d)
    if "upper" in obj:
        items = obj["upper"]
        n = d * (d + 1) // 2
        if not isinstance(items, list) or len(items) != n:
            raise ParseError(f"'upper' must list d(d+1)/2 = {n} values")
        m = np.zeros((d, d), dtype=complex)
        it = iter(enumerate(items))
        for j in range(d):
            for k in range(j, d):
                i, v = next(it)
                m[j, k] = _number(v, f"upper[{i}]")
                if k != j:
                    m[k, j] = np.conj(m[j, k])
        return m
    raise ParseError("expected an 'entries' or 'upper' field")


def matrix_to_obj(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "dim": int(m.shape[0]),
        "entries": [[float(v.real), float(v.imag)] for v in m.ravel()],
    }


def loads_matrix(text: str) -> np.ndarray:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return matrix_from_obj(obj)


def dumps_matrix(m) -> str:
    return json.dumps(matrix_to_obj(m))


def read_matrix(path) -> tuple[np.ndarray, str]:
    """Matrix and the sha256 digest of the file bytes."""
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"file is not UTF-8: {exc}") from exc
    return loads_matrix(text), hashlib.sha256(raw).hexdigest()


def write_matrix(path, m) -> None:
    Path(path).write_text(dumps_matrix(m) + "\n", encoding="utf-8")
