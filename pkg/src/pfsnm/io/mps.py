"""MPS reader producing an equality-standard-form LP over a single orthant.

Free format (whitespace separated, names without spaces) is the default;
``fixed=True`` reads the classic column layout. Conversion rules:

* ``L`` / ``G`` rows get a nonnegative slack (``+s`` / ``-s``).
* Ranged rows ``lo <= a.x <= hi`` become ``a.x - w = lo`` and ``w + v = hi - lo``.
* A finite lower bound is shifted out (``x = l + x'``); a finite upper bound
  on top of it adds the row ``x' + w = u - l``. Upper-bounded variables with
  no lower bound are mirrored (``x = u - x'``), free ones are split.
* Rows without entries are checked and dropped.
* Fixed variables are substituted out. With ``prune=True``, columns pinned
  by a singleton equality row are fixed the same way (such a row can leave
  the feasible set without an interior point) and dependent rows are dropped.
* The objective-row RHS ``r`` contributes ``-r`` to the objective offset.

The map back to the original variables is kept in ``meta["recover"]`` as
``(T, t)`` with ``x_orig = T @ x + t``.
"""

from __future__ import annotations

import logging
import math
from collections import OrderedDict
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..cones import ConeSpec, Orthant
from ..errors import ParseError, StructuralError
from ..problem import LinearMap, ProblemData, prune_rows

log = logging.getLogger(__name__)

SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA", "OBJSENSE", "OBJSENSE MAX",
            "OBJSENSE MIN", "OBJSENSE MAXIMIZE", "OBJSENSE MINIMIZE"}
INF = math.inf


def _fixed_fields(line: str) -> list[str]:
    line = line.ljust(61)
    spans = [(1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61)]
    return [line[a:b].strip() for a, b in spans]


def _num(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", lineno) from None


class _Raw:
    def __init__(self):
        self.name = ""
        self.obj_row = None
        self.rows: OrderedDict[str, str] = OrderedDict()  # name -> type
        self.free_rows: set[str] = set()
        self.cols: OrderedDict[str, int] = OrderedDict()
        self.entries: dict[tuple[str, int], float] = {}
        self.obj: dict[int, float] = {}
        self.rhs: dict[str, float] = {}
        self.obj_rhs = 0.0
        self.ranges: dict[str, float] = {}
        self.lb: dict[int, float] = {}
        self.ub: dict[int, float] = {}
        self.maximize = False


def _parse(lines, fixed: bool) -> _Raw:
    raw = _Raw()
    section = None
    dup_warned = False
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n\r")
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        if not line[0].isspace():
            head = line.split()
            key = head[0].upper()
            if key == "NAME":
                raw.name = head[1] if len(head) > 1 else ""
                section = "NAME"
            elif key == "OBJSENSE":
                section = "OBJSENSE"
                if len(head) > 1:
                    raw.maximize = head[1].upper().startswith("MAX")
            elif key in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                section = key
            elif key == "ENDATA":
                section = "ENDATA"
                break
            elif section == "OBJSENSE" and key in ("MAX", "MAXIMIZE", "MIN", "MINIMIZE"):
                raw.maximize = key.startswith("MAX")
            else:
                raise ParseError(f"unknown section {head[0]!r}", lineno)
            continue

        if fixed and section in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
            f = _fixed_fields(line)
            if section == "ROWS":
                tok = [f[0], f[1]]
            elif section == "BOUNDS":
                tok = [f[0], f[1], f[2]] + ([f[3]] if f[3] else [])
            else:
                tok = [f[1], f[2], f[3]] + ([f[4], f[5]] if f[4] else [])
        else:
            tok = line.split()

        if section == "OBJSENSE":
            raw.maximize = tok[0].upper().startswith("MAX")
        elif section == "ROWS":
            if len(tok) != 2:
                raise ParseError("ROWS entry needs a type and a name", lineno)
            typ, name = tok[0].upper(), tok[1]
            if typ not in ("N", "E", "L", "G"):
                raise ParseError(f"unknown row type {tok[0]!r}", lineno)
            if name in raw.rows or name in raw.free_rows or name == raw.obj_row:
                raise ParseError(f"duplicate row {name!r}", lineno)
            if typ == "N":
                if raw.obj_row is None:
                    raw.obj_row = name
                else:
                    raw.free_rows.add(name)
            else:
                raw.rows[name] = typ
        elif section == "COLUMNS":
            if "'MARKER'" in tok:
                log.warning("line %d: integer markers ignored, variables treated as continuous", lineno)
                continue
            if len(tok) not in (3, 5):
                raise ParseError("COLUMNS entry needs a column and 1 or 2 (row, value) pairs", lineno)
            col = tok[0]
            j = raw.cols.setdefault(col, len(raw.cols))
            for rname, val in zip(tok[1::2], tok[2::2]):
                v = _num(val, lineno)
                if rname == raw.obj_row:
                    raw.obj[j] = raw.obj.get(j, 0.0) + v
                elif rname in raw.free_rows:
                    continue
                elif rname in raw.rows:
                    key = (rname, j)
                    if key in raw.entries:
                        if not dup_warned:
                            log.warning("line %d: duplicate entry (%s, %s) summed", lineno, rname, col)
                            dup_warned = True
                        raw.entries[key] += v
                    else:
                        raw.entries[key] = v
                else:
                    raise ParseError(f"unknown row {rname!r} in COLUMNS", lineno)
        elif section in ("RHS", "RANGES"):
            if len(tok) % 2 == 0:  # set name omitted
                tok = [""] + tok
            if len(tok) not in (3, 5):
                raise ParseError(f"{section} entry needs 1 or 2 (row, value) pairs", lineno)
            for rname, val in zip(tok[1::2], tok[2::2]):
                v = _num(val, lineno)
                if section == "RHS":
                    if rname == raw.obj_row:
                        raw.obj_rhs = v
                    elif rname in raw.rows:
                        raw.rhs[rname] = v
                    elif rname not in raw.free_rows:
                        raise ParseError(f"unknown row {rname!r} in RHS", lineno)
                else:
                    if rname not in raw.rows:
                        raise ParseError(f"RANGES on unknown or objective row {rname!r}", lineno)
                    raw.ranges[rname] = v
        elif section == "BOUNDS":
            typ = tok[0].upper()
            needs_val = typ in ("UP", "LO", "FX", "LI", "UI")
            if typ not in ("UP", "LO", "FX", "FR", "MI", "PL", "BV", "LI", "UI", "SC"):
                raise ParseError(f"unknown bound type {tok[0]!r}", lineno)
            if typ == "SC":
                raise ParseError("semicontinuous bounds are not supported", lineno)
            rest = tok[1:]
            # forms: [set] col [val]
            if needs_val:
                if len(rest) == 2:
                    col, val = rest
                elif len(rest) == 3:
                    col, val = rest[1], rest[2]
                else:
                    raise ParseError(f"bound {typ} needs a column and a value", lineno)
                v = _num(val, lineno)
            else:
                if len(rest) == 1:
                    col = rest[0]
                elif len(rest) >= 2:
                    col = rest[1]
                else:
                    raise ParseError(f"bound {typ} needs a column", lineno)
                v = None
            if col not in raw.cols:
                raise ParseError(f"bound on unknown column {col!r}", lineno)
            j = raw.cols[col]
            if typ in ("UP", "UI"):
                raw.ub[j] = v
                if v < 0 and raw.lb.get(j, 0.0) == 0.0 and j not in raw.lb:
                    log.warning("line %d: negative upper bound on %s with default lower bound; lower bound set to -inf",
                                lineno, col)
                    raw.lb[j] = -INF
            elif typ in ("LO", "LI"):
                raw.lb[j] = v
            elif typ == "FX":
                raw.lb[j] = raw.ub[j] = v
            elif typ == "FR":
                raw.lb[j], raw.ub[j] = -INF, INF
            elif typ == "MI":
                raw.lb[j] = -INF
            elif typ == "PL":
                raw.ub[j] = INF
            elif typ == "BV":
                raw.lb[j], raw.ub[j] = 0.0, 1.0
        elif section == "NAME":
            continue
        else:
            raise ParseError("data line outside of any section", lineno)
    else:
        if section != "ENDATA":
            log.warning("MPS file ended without ENDATA")
    if raw.obj_row is None:
        raise ParseError("no objective (N) row")
    return raw


def _row_bounds(typ: str, rhs: float, rng: float | None) -> tuple[float, float]:
    if rng is None:
        return {"E": (rhs, rhs), "L": (-INF, rhs), "G": (rhs, INF)}[typ]
    r = abs(rng)
    if typ == "E":
        return (rhs, rhs + r) if rng >= 0 else (rhs - r, rhs)
    if typ == "L":
        return rhs - r, rhs
    return rhs, rhs + r


def _fix_singletons(raw: _Raw) -> list[str]:
    """Fix columns determined by singleton equality rows, repeating until stable."""
    fixed_cols: set[int] = {j for j in range(len(raw.cols))
                            if raw.lb.get(j, 0.0) == raw.ub.get(j, INF)}
    by_row: dict[str, list[tuple[int, float]]] = {}
    for (r, j), v in raw.entries.items():
        if v != 0.0:
            by_row.setdefault(r, []).append((j, v))
    names = list(raw.cols)
    done: list[str] = []
    changed = True
    while changed:
        changed = False
        for r, typ in raw.rows.items():
            if typ != "E" or r in raw.ranges or r in done:
                continue
            live = [(j, v) for j, v in by_row.get(r, []) if j not in fixed_cols]
            if len(live) != 1:
                continue
            j, a = live[0]
            rest = sum(v * raw.lb.get(k, 0.0) for k, v in by_row[r] if k in fixed_cols)
            val = (raw.rhs.get(r, 0.0) - rest) / a
            lb, ub = raw.lb.get(j, 0.0), raw.ub.get(j, INF)
            tol = 1e-9 * (1 + abs(val))
            if val < lb - tol or val > ub + tol:
                raise StructuralError(f"row {r!r} fixes column {names[j]!r} to {val} outside its bounds [{lb}, {ub}]")
            raw.lb[j] = raw.ub[j] = val
            fixed_cols.add(j)
            done.append(r)
            changed = True
    return done


def _convert(raw: _Raw, name: str, prune: bool = False) -> ProblemData:
    if prune:
        pinned = _fix_singletons(raw)
        if pinned:
            log.info("fixed %d columns from singleton rows %s", len(pinned), pinned[:5])
    n0 = len(raw.cols)
    if n0 == 0:
        raise StructuralError("MPS file has no columns")
    col_names = list(raw.cols)
    row_names = list(raw.rows)
    row_index = {r: i for i, r in enumerate(row_names)}
    m0 = len(row_names)
    rows, cols, vals = [], [], []
    for (r, j), v in raw.entries.items():
        rows.append(row_index[r])
        cols.append(j)
        vals.append(v)
    A0 = sp.csc_matrix((vals, (rows, cols)), shape=(m0, n0))
    c0 = np.zeros(n0)
    for j, v in raw.obj.items():
        c0[j] = v
    sense = -1.0 if raw.maximize else 1.0
    c0 *= sense
    offset = -raw.obj_rhs * sense

    # variables: x_orig = T x_new + t
    T_rows, T_cols, T_vals = [], [], []
    t = np.zeros(n0)
    new_cols = []  # sparse columns of A in terms of new variables
    c_new = []
    new_names = []
    extra_rows = []  # (new var index, rhs) for x' + w = u - l
    shift = np.zeros(n0)  # contribution to b: A0 @ t
    for j in range(n0):
        lb, ub = raw.lb.get(j, 0.0), raw.ub.get(j, INF)
        if lb > ub:
            raise StructuralError(f"column {col_names[j]!r} has lower bound {lb} > upper bound {ub}")
        a = A0.getcol(j)
        if lb == ub:
            t[j] = lb
            offset += c0[j] * lb
            continue
        if math.isfinite(lb):
            t[j] = lb
            offset += c0[j] * lb
            k = len(new_cols)
            new_cols.append(a)
            c_new.append(c0[j])
            new_names.append(col_names[j])
            T_rows.append(j); T_cols.append(k); T_vals.append(1.0)
            if math.isfinite(ub):
                extra_rows.append((k, ub - lb, col_names[j]))
        elif math.isfinite(ub):
            t[j] = ub
            offset += c0[j] * ub
            k = len(new_cols)
            new_cols.append(-a)
            c_new.append(-c0[j])
            new_names.append(col_names[j] + "_neg")
            T_rows.append(j); T_cols.append(k); T_vals.append(-1.0)
        else:
            k = len(new_cols)
            new_cols += [a, -a]
            c_new += [c0[j], -c0[j]]
            new_names += [col_names[j] + "_p", col_names[j] + "_m"]
            T_rows += [j, j]; T_cols += [k, k + 1]; T_vals += [1.0, -1.0]
    lo_hi = []
    for i, r in enumerate(row_names):
        lo_hi.append(_row_bounds(raw.rows[r], raw.rhs.get(r, 0.0), raw.ranges.get(r)))
    shifted = A0 @ t

    nx = len(new_cols)
    A_core = sp.hstack(new_cols, format="csc") if nx else sp.csc_matrix((m0, 0))
    # slack columns
    blocks_rows, blocks_cols, blocks_vals = [], [], []
    n_slack = 0
    extra_b = []
    extra_names = []
    b = np.zeros(m0)
    slack_names = []
    pending_range = []  # (w index, width, row name)
    core_nnz = np.diff(sp.csr_matrix(A_core).indptr) if nx else np.zeros(m0, dtype=int)
    for i, (lo, hi) in enumerate(lo_hi):
        lo_s, hi_s = lo - shifted[i], hi - shifted[i]
        if core_nnz[i] == 0:
            # vacuous row (no live columns): check it, then let it be dropped below
            tol = 1e-9 * (1 + max(abs(x) for x in (lo_s, hi_s) if math.isfinite(x))) if (
                math.isfinite(lo_s) or math.isfinite(hi_s)) else 0.0
            if lo_s > tol or hi_s < -tol:
                raise StructuralError(f"row {row_names[i]!r} has no entries but requires {lo_s} <= 0 <= {hi_s} (infeasible)")
            continue
        if lo == hi:
            b[i] = lo_s
        elif math.isfinite(lo) and math.isfinite(hi):
            b[i] = lo_s
            w = n_slack
            blocks_rows.append(i); blocks_cols.append(w); blocks_vals.append(-1.0)
            slack_names.append(row_names[i] + "_rw")
            n_slack += 1
            pending_range.append((w, hi - lo, row_names[i]))
        elif math.isfinite(hi):
            b[i] = hi_s
            blocks_rows.append(i); blocks_cols.append(n_slack); blocks_vals.append(1.0)
            slack_names.append(row_names[i] + "_sl")
            n_slack += 1
        elif math.isfinite(lo):
            b[i] = lo_s
            blocks_rows.append(i); blocks_cols.append(n_slack); blocks_vals.append(-1.0)
            slack_names.append(row_names[i] + "_sg")
            n_slack += 1
        else:
            raise StructuralError(f"row {row_names[i]!r} has no finite bound")
    m1 = m0 + len(extra_rows) + len(pending_range)
    # extra rows: upper bounds on shifted variables, then range widths
    E_rows, E_cols, E_vals = [], [], []
    r = m0
    for k, width, nm in extra_rows:
        E_rows += [r, r]; E_cols += [k, nx + n_slack]; E_vals += [1.0, 1.0]
        slack_names.append(nm + "_ub")
        n_slack += 1
        extra_b.append(width)
        extra_names.append(nm + "_UB")
        r += 1
    for w, width, nm in pending_range:
        E_rows += [r, r]; E_cols += [nx + w, nx + n_slack]; E_vals += [1.0, 1.0]
        slack_names.append(nm + "_rv")
        n_slack += 1
        extra_b.append(width)
        extra_names.append(nm + "_RNG")
        r += 1
    n_tot = nx + n_slack
    core = sp.coo_matrix(A_core)
    S = sp.coo_matrix((blocks_vals, (blocks_rows, np.asarray(blocks_cols, dtype=int) + nx)), shape=(m1, n_tot))
    E = sp.coo_matrix((E_vals, (E_rows, E_cols)), shape=(m1, n_tot))
    Core = sp.coo_matrix((core.data, (core.row, core.col)), shape=(m1, n_tot))
    A = (Core + S + E).tocsr()
    b_full = np.concatenate([b, extra_b])
    c = np.concatenate([np.asarray(c_new, dtype=float), np.zeros(n_slack)])
    T = sp.coo_matrix((T_vals, (T_rows, T_cols)), shape=(n0, n_tot)).tocsr()
    # drop rows without entries (empty in the file, or all their columns were fixed)
    nnz_row = np.diff(A.indptr)
    empty = np.flatnonzero(nnz_row == 0)
    all_rows = row_names + extra_names
    if empty.size:
        bad = [all_rows[i] for i in empty if abs(b_full[i]) > 1e-9 * (1 + abs(b_full[i]))]
        if bad:
            raise StructuralError(f"rows {bad[:5]} are empty but have nonzero right-hand side (infeasible)")
        keep = np.flatnonzero(nnz_row > 0)
        A, b_full = A[keep], b_full[keep]
        all_rows = [all_rows[i] for i in keep]
    if A.shape[0] == 0:
        raise StructuralError("no constraints left after conversion")
    meta = {"recover": (T, t), "original_columns": col_names, "maximize": raw.maximize, "source": "mps"}
    return ProblemData(LinearMap(A), b_full, c, ConeSpec.of(Orthant(n_tot)), name or raw.name or "mps",
                       float(offset), all_rows, new_names + slack_names, meta)


def parse_mps(text: str, fixed: bool = False, name: str = "", prune: bool = False) -> ProblemData:
    raw = _parse(text.splitlines(), fixed)
    prob = _convert(raw, name, prune)
    return _certify(prob, prune)


def read_mps(path, fixed: bool = False, prune: bool = False) -> ProblemData:
    path = Path(path)
    try:
        text = path.read_text()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not a text file") from exc
    raw = _parse(text.splitlines(), fixed)
    prob = _convert(raw, raw.name or path.stem, prune)
    return _certify(prob, prune)


def _certify(prob: ProblemData, prune: bool) -> ProblemData:
    if prune:
        prob, dropped = prune_rows(prob)
        if dropped:
            log.info("pruned %d dependent rows", len(dropped))
        return prob.certify()
    try:
        return prob.certify()
    except StructuralError:
        from ..problem import dependent_rows
        dep = dependent_rows(prob.A.dense)
        names = [prob.row_names[i] for i in dep] if prob.row_names else dep
        raise StructuralError(f"A is rank deficient; redundant rows {names} (use prune_rows / --prune-rows)") from None


def recover_original(prob: ProblemData, x: np.ndarray) -> np.ndarray:
    """Values of the original MPS columns for a standard-form point."""
    T, t = prob.meta["recover"]
    return T @ x + t
