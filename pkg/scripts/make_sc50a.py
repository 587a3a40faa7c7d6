"""Write tests/data/netlib/sc50a.mps from the SC50A arrays shipped with scipy's benchmarks.

The arrays hold SC50A as ``min c.x, A_ub x <= b_ub, A_eq x = b_eq, x >= 0``.
Row and column names are synthetic (R01.., C01..); the LP is unchanged.

    python3 scripts/make_sc50a.py path/to/SC50A.npz
"""

import sys
import warnings
from pathlib import Path

import numpy as np


def main(src: str, dst: str) -> None:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = np.load(src, allow_pickle=True)
        c, A_ub, b_ub, A_eq, b_eq = (d[k] for k in ("c", "A_ub", "b_ub", "A_eq", "b_eq"))
    rows = [(f"L{i + 1:02d}", "L", A_ub[i], b_ub[i]) for i in range(A_ub.shape[0])]
    rows += [(f"E{i + 1:02d}", "E", A_eq[i], b_eq[i]) for i in range(A_eq.shape[0])]
    out = ["NAME SC50A", "ROWS", " N COST"]
    out += [f" {t} {nm}" for nm, t, _, _ in rows]
    out.append("COLUMNS")
    for j in range(c.size):
        if c[j] != 0:
            out.append(f" C{j + 1:02d} COST {float(c[j])!r}")
        for nm, _, a, _ in rows:
            if a[j] != 0:
                out.append(f" C{j + 1:02d} {nm} {float(a[j])!r}")
    out.append("RHS")
    out += [f" RHS {nm} {float(v)!r}" for nm, _, _, v in rows if v != 0]
    out.append("ENDATA")
    Path(dst).write_text("\n".join(out) + "\n")


if __name__ == "__main__":
    root = Path(__file__).resolve().parents[1]
    main(sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else str(root / "tests/data/netlib/sc50a.mps"))
