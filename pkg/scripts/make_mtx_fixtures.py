"""Regenerate the small MatrixMarket fixtures in tests/data/mtx/.

Deterministic (fixed seed). Two files are hand-sized (identity and a symmetric
lower triangle); the other three are random sparse design matrices.
"""

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from pfsnm.io.matrix_market import write_matrix_market

ROOT = Path(__file__).resolve().parents[1] / "tests" / "data" / "mtx"


def main() -> None:
    ROOT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240607)
    write_matrix_market(sp.identity(2), ROOT / "identity2.mtx")
    (ROOT / "sym4.mtx").write_text(
        "%%MatrixMarket matrix coordinate real symmetric\n"
        "% lower triangle of a 4x4 tridiagonal matrix\n"
        "4 4 7\n"
        "1 1 2.0\n2 1 -1.0\n2 2 2.0\n3 2 -1.0\n3 3 2.0\n4 3 -1.0\n4 4 2.0\n")
    for name, (p, n, dens) in {"rand8x5": (8, 5, 0.6), "rand12x6": (12, 6, 0.4), "rand15x10": (15, 10, 0.3)}.items():
        M = sp.random(p, n, density=dens, random_state=rng, data_rvs=rng.standard_normal, format="coo")
        M = sp.coo_matrix(np.round(M.toarray(), 6))
        write_matrix_market(M, ROOT / f"{name}.mtx")


if __name__ == "__main__":
    main()
