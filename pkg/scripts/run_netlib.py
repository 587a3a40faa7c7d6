"""Solve the bundled NETLIB LPs with the practical settings and compare against HiGHS.

    python3 scripts/run_netlib.py [--out results/netlib.csv] [--sigma 0.2] [--rho 30] [--mu0 100]

Writes one bench record per instance and prints objective, reference value,
relative error and wall time.
"""

import argparse
from pathlib import Path

from scipy.optimize import linprog

from pfsnm.bench import run_suite, write_records_csv
from pfsnm.io import load_problem
from pfsnm.solver import SolverConfig

DATA = Path(__file__).resolve().parents[1] / "tests" / "data" / "netlib"
INSTANCES = ["afiro", "sc50a", "adlittle"]


def reference(prob) -> float:
    # HiGHS on the same standard form; the MPS reader is shared, the solver is not
    A = prob.A.mat
    res = linprog(prob.c, A_eq=A, b_eq=prob.b, bounds=(0, None), method="highs")
    return float(res.fun) + prob.objective_offset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/netlib.csv")
    ap.add_argument("--sigma", type=float, default=0.2)
    ap.add_argument("--rho", type=float, default=30.0)
    ap.add_argument("--mu0", type=float, default=100.0)
    ap.add_argument("--max-phase1", type=int, default=100_000)
    args = ap.parse_args()

    cfg = SolverConfig(sigma=args.sigma, rho=args.rho, mu0=args.mu0, max_phase1=args.max_phase1)
    paths = [(n.upper(), DATA / f"{n}.mps") for n in INSTANCES]
    recs = run_suite(paths, cfg, label=f"sigma={args.sigma}", prune=True)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_records_csv(recs, args.out)

    print(f"{'instance':10s} {'status':16s} {'objective':>18s} {'reference':>18s} {'rel err':>9s} {'time':>7s}")
    for (name, path), r in zip(paths, recs):
        ref = reference(load_problem(path, prune=True))
        err = abs(r.objective - ref) / abs(ref)
        print(f"{name:10s} {r.status:16s} {r.objective:18.10g} {ref:18.10g} {err:9.1e} {r.time_s:6.2f}s")


if __name__ == "__main__":
    main()
