"""Square-root lasso on the MatrixMarket fixtures, checked against a direct evaluation.

    python3 scripts/lasso_experiment.py [files.mtx ...] [--seed 0] [--sigma 0.2]

For each matrix D the right-hand side b is synthetic (seeded, |b| = 0.5) and the
l1 weight defaults to |D^T b|_inf.
"""

import argparse
from pathlib import Path

from pfsnm.io import load_problem
from pfsnm.io.lasso import lasso_objective, recover_y, subgradient_gap
from pfsnm.io.matrix_market import read_matrix_market
from pfsnm.solver import SolverConfig, solve

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "mtx"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("files", nargs="*")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sigma", type=float, default=0.2)
    ap.add_argument("--eps", type=float, default=1e-10)
    args = ap.parse_args()
    files = [Path(f) for f in args.files] or sorted(DATA.glob("*.mtx"))

    cfg = SolverConfig(sigma=args.sigma, eps=args.eps)
    print(f"{'matrix':12s} {'p x n':>7s} {'weight':>9s} {'objective':>14s} {'rel diff':>9s} {'subgrad':>9s} {'nnz(y)':>6s}")
    for f in files:
        D = read_matrix_market(f).toarray()
        prob = load_problem(f, fmt="lasso", seed=args.seed)
        res = solve(prob, cfg)
        rho = prob.meta["lasso"]["rho"]
        y = recover_y(prob, res.x)
        direct = lasso_objective(D, prob.b, rho, y)
        gap = subgradient_gap(D, prob.b, rho, y)
        nnz = int((abs(y) > 1e-6).sum())
        print(f"{f.stem:12s} {D.shape[0]:>3d}x{D.shape[1]:<3d} {rho:9.4f} {res.objective:14.10f} "
              f"{abs(direct - res.objective) / abs(direct):9.1e} {gap:9.1e} {nnz:6d}  {res.status.value}")


if __name__ == "__main__":
    main()
