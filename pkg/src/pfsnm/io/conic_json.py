"""Conic interchange format (JSON).

::

    {"name": str, "m": int,
     "cone": [{"type": "orthant" | "soc" | "psd", "dim": int}, ...],
     "A": {"rows": [...], "cols": [...], "vals": [...]},
     "b": [...], "c": [...], "offset": float}

Indices are 0-based. For ``psd`` blocks ``dim`` is the matrix order and the
block occupies ``dim (dim + 1) / 2`` svec coordinates. Floats are written with
``repr`` (shortest round-trip form), so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np
import scipy.sparse as sp

from ..cones import ConeSpec, Orthant, Psd, SecondOrder
from ..errors import ParseError, StructuralError
from ..problem import LinearMap, ProblemData

_NUM_ARRAY = {"type": "array", "items": {"type": "number"}}
_INT_ARRAY = {"type": "array", "items": {"type": "integer", "minimum": 0}}

SCHEMA = {
    "type": "object",
    "required": ["m", "cone", "A", "b", "c"],
    "properties": {
        "name": {"type": "string"},
        "m": {"type": "integer", "minimum": 1},
        "cone": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["type", "dim"],
                "properties": {
                    "type": {"enum": ["orthant", "soc", "psd"]},
                    "dim": {"type": "integer", "minimum": 1},
                },
                "additionalProperties": False,
                "if": {"properties": {"type": {"const": "soc"}}},
                "then": {"properties": {"dim": {"minimum": 2}}},
            },
        },
        "A": {
            "type": "object",
            "required": ["rows", "cols", "vals"],
            "properties": {"rows": _INT_ARRAY, "cols": _INT_ARRAY, "vals": _NUM_ARRAY},
            "additionalProperties": False,
        },
        "b": _NUM_ARRAY,
        "c": _NUM_ARRAY,
        "offset": {"type": "number"},
    },
    "additionalProperties": False,
}

_TYPES = {"orthant": Orthant, "soc": SecondOrder, "psd": Psd}


def _path(err: jsonschema.ValidationError) -> str:
    parts = []
    for p in err.absolute_path:
        parts.append(f"[{p}]" if isinstance(p, int) else (f".{p}" if parts else str(p)))
    return "".join(parts) or "<root>"


def _fail(path: str, msg: str):
    raise ParseError(f"{path}: {msg}")


def problem_from_dict(doc) -> ProblemData:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as err:
        best = jsonschema.exceptions.best_match([err])
        msg = best.message
        if best.validator == "required":
            # name the missing field itself
            missing = [k for k in best.validator_value if k not in best.instance]
            p = _path(best)
            msg = f"missing required field {missing[0]!r}"
            _fail(missing[0] if p == "<root>" else f"{p}.{missing[0]}", msg)
        _fail(_path(best), msg)
    m = doc["m"]
    cone = ConeSpec(tuple(_TYPES[blk["type"]](blk["dim"]) for blk in doc["cone"]))
    n = cone.dim
    A = doc["A"]
    k = len(A["vals"])
    for key in ("rows", "cols"):
        if len(A[key]) != k:
            _fail(f"A.{key}", f"length {len(A[key])} differs from A.vals length {k}")
    for key, bound in (("rows", m), ("cols", n)):
        for i, v in enumerate(A[key]):
            if v >= bound:
                _fail(f"A.{key}[{i}]", f"index {v} out of range (< {bound})")
    for key, size in (("b", m), ("c", n)):
        if len(doc[key]) != size:
            _fail(key, f"length {len(doc[key])}, expected {size}")
    mat = sp.coo_matrix((np.asarray(A["vals"], dtype=float), (A["rows"], A["cols"])), shape=(m, n))
    try:
        return ProblemData(LinearMap(mat), doc["b"], doc["c"], cone, doc.get("name", "problem"),
                           float(doc.get("offset", 0.0)))
    except StructuralError as exc:
        raise ParseError(str(exc)) from None


def problem_to_dict(prob: ProblemData) -> dict:
    coo = prob.A.mat.tocoo()
    order = np.lexsort((coo.col, coo.row))
    cone = []
    for blk in prob.cone.blocks:
        if isinstance(blk, Orthant):
            cone.append({"type": "orthant", "dim": blk.n})
        elif isinstance(blk, SecondOrder):
            cone.append({"type": "soc", "dim": blk.d})
        else:
            cone.append({"type": "psd", "dim": blk.n})
    for arr in (prob.b, prob.c, coo.data):
        if not np.all(np.isfinite(arr)):
            raise ValueError("conic JSON cannot hold non-finite values")
    return {
        "name": prob.name,
        "m": prob.m,
        "cone": cone,
        "A": {"rows": coo.row[order].tolist(), "cols": coo.col[order].tolist(), "vals": coo.data[order].tolist()},
        "b": prob.b.tolist(),
        "c": prob.c.tolist(),
        "offset": float(prob.objective_offset),
    }


def read_conic_json(path) -> ProblemData:
    text = Path(path).read_text()
    try:
        doc = json.loads(text, parse_constant=lambda s: _fail("<root>", f"non-finite constant {s}"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return problem_from_dict(doc)


def write_conic_json(prob: ProblemData, path) -> None:
    doc = problem_to_dict(prob)
    Path(path).write_text(json.dumps(doc, allow_nan=False) + "\n")


def dumps(prob: ProblemData) -> str:
    return json.dumps(problem_to_dict(prob), allow_nan=False)


def loads(text: str) -> ProblemData:
    return problem_from_dict(json.loads(text))


__all__ = ["SCHEMA", "read_conic_json", "write_conic_json", "problem_from_dict", "problem_to_dict", "dumps", "loads"]
