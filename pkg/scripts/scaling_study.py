"""Certified-mode iteration scaling: total Newton steps against sqrt(nu) ln(mu0/eps).

    python3 scripts/scaling_study.py [--kind lp] [--nu 8 32 128 512] [--eps 1e-8] [--seeds 0 1]

Prints one row per solve and the fit through the origin.
"""

import argparse
from pathlib import Path

from pfsnm.bench import scaling_study, write_scaling_csv
from pfsnm.solver import SolverConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", choices=("lp", "socp"), default="lp")
    ap.add_argument("--nu", type=int, nargs="+", default=[8, 32, 128, 512])
    ap.add_argument("--eps", type=float, default=1e-8)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--out", default="results/scaling.csv")
    args = ap.parse_args()

    fit = scaling_study(args.nu, args.eps, SolverConfig(full_merits=False), seeds=args.seeds, kind=args.kind)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_scaling_csv(fit, args.out)
    print(f"{'nu':>5s} {'seed':>4s} {'outer':>7s} {'predicted':>9s} {'steps':>7s} {'x':>10s} {'time':>8s}")
    for r in fit.rows:
        print(f"{r.nu:5d} {r.seed:4d} {r.outer_iters:7d} {r.predicted_outer:9d} {r.total_newton_steps:7d} "
              f"{r.x_value:10.1f} {r.time_s:7.1f}s")
    print(f"slope {fit.slope:.4f}  R^2 {fit.r2:.4f}  outer exact {fit.outer_exact}  "
          f"single-step recentering {fit.single_step_recentering}")


if __name__ == "__main__":
    main()
