"""MatrixMarket reader for ``coordinate real {general, symmetric}`` files."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..errors import ParseError

_SYMMETRY = ("general", "symmetric")


def parse_matrix_market(text: str) -> sp.coo_matrix:
    """Parse MatrixMarket text; symmetric files are expanded to both triangles."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", 1)
    banner = lines[0].split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket":
        raise ParseError("missing %%MatrixMarket banner", 1)
    obj, fmt, field, sym = (b.lower() for b in banner[1:])
    if (obj, fmt) != ("matrix", "coordinate"):
        raise ParseError(f"unsupported layout {obj} {fmt}; only 'matrix coordinate' is read", 1)
    if field not in ("real", "integer"):
        raise ParseError(f"unsupported field {field!r}; expected real", 1)
    if sym not in _SYMMETRY:
        raise ParseError(f"unsupported symmetry {sym!r}; expected general or symmetric", 1)

    it = ((i + 1, ln) for i, ln in enumerate(lines) if i > 0 and ln.strip() and not ln.lstrip().startswith("%"))
    try:
        lineno, size = next(it)
    except StopIteration:
        raise ParseError("missing size line", len(lines)) from None
    try:
        nr, nc, nnz = (int(t) for t in size.split())
    except ValueError:
        raise ParseError(f"bad size line {size.strip()!r}", lineno) from None
    if nr < 0 or nc < 0 or nnz < 0:
        raise ParseError("negative size", lineno)
    if sym == "symmetric" and nr != nc:
        raise ParseError(f"symmetric matrix must be square, got {nr}x{nc}", lineno)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    k = 0
    for lineno, ln in it:
        if k >= nnz:
            raise ParseError(f"more than the declared {nnz} entries", lineno)
        tok = ln.split()
        if len(tok) != 3:
            raise ParseError(f"entry {k + 1}: expected 'row col value'", lineno)
        try:
            i, j, v = int(tok[0]), int(tok[1]), float(tok[2])
        except ValueError:
            raise ParseError(f"entry {k + 1}: cannot parse {ln.strip()!r}", lineno) from None
        if not (1 <= i <= nr and 1 <= j <= nc):
            raise ParseError(f"entry {k + 1}: index ({i}, {j}) outside 1..{nr} x 1..{nc}", lineno)
        if sym == "symmetric" and j > i:
            raise ParseError(f"entry {k + 1}: symmetric files store the lower triangle only, got ({i}, {j})", lineno)
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != nnz:
        raise ParseError(f"declared {nnz} entries, found {k}", len(lines))
    if sym == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    return sp.coo_matrix((vals, (rows, cols)), shape=(nr, nc))


def read_matrix_market(path) -> sp.coo_matrix:
    return parse_matrix_market(Path(path).read_text())


def write_matrix_market(mat, path) -> None:
    coo = sp.coo_matrix(mat)
    out = ["%%MatrixMarket matrix coordinate real general", f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}"]
    out += [f"{i + 1} {j + 1} {float(v)!r}" for i, j, v in zip(coo.row, coo.col, coo.data)]
    Path(path).write_text("\n".join(out) + "\n")
