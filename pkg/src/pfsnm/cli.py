"""Command-line entry point: ``python3 -m pfsnm <subcommand> ...``.

Exit codes: 0 optimal / success, 1 usage error, 2 parse or structural error,
3 numerical error (also infeasibility suspected), 4 iteration or time limit.
Every run ends with exactly one ``STATUS key=value ...`` line on stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import cones
from .errors import NumericalError, ParameterError, ParseError, PfsnmError, StructuralError
from .solver import SolverConfig, Status, TraceRecord, solve

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERICAL, EXIT_LIMIT = 0, 1, 2, 3, 4

_STATUS_EXIT = {
    Status.OPTIMAL: EXIT_OK,
    Status.ITERATION_LIMIT: EXIT_LIMIT,
    Status.NUMERICAL_ERROR: EXIT_NUMERICAL,
    Status.INFEASIBLE_SUSPECT: EXIT_NUMERICAL,
}

TRACE_COLUMNS = ("k", "j", "mu", "delta", "xi", "primal_res", "dual_res", "phi_norm", "time_s")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays strict."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _status_line(**kv) -> str:
    parts = []
    for k, v in kv.items():
        if isinstance(v, float):
            v = repr(v)
        v = str(v).replace(" ", "_")
        parts.append(f"{k}={v}")
    return "STATUS " + " ".join(parts)


# ---------------------------------------------------------------------------
# argument parsing


def _sigma(text: str):
    if text == "certified":
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--sigma must be 'certified' or a number in (0,1), got {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"--sigma must lie in (0,1), got {v}")
    return v


def _positive(name):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} expects a number, got {text!r}") from None
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"{name} must be positive and finite, got {text}")
        return v
    return conv


def _rho(text):
    v = _positive("--rho")(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"--rho must be >= 1, got {text}")
    return v


def _add_solver_flags(p):
    g = p.add_argument_group("solver")
    g.add_argument("--rho", type=_rho, default=1.0, help="SBAL penalty, >= 1 (default 1)")
    g.add_argument("--mu0", type=_positive("--mu0"), default=1.0, help="initial smoothing parameter (default 1)")
    g.add_argument("--eps", type=_positive("--eps"), default=1e-8, help="target mu (default 1e-8)")
    g.add_argument("--sigma", type=_sigma, default="certified", help="'certified' or a fixed factor in (0,1)")
    g.add_argument("--time-limit", type=_positive("--time-limit"), default=None, help="seconds")
    g.add_argument("--max-outer", type=int, default=100_000)
    g.add_argument("--max-inner", type=int, default=50)
    g.add_argument("--max-phase1", type=int, default=1000)
    g.add_argument("--mu0-heuristic", action="store_true", help="mu0 = max(1, <x, s+>/nu) from the initial point")


def _add_input_flags(p, many=False):
    if many:
        p.add_argument("inputs", nargs="+", help="problem files")
    else:
        p.add_argument("input", help="problem file")
    p.add_argument("--format", choices=("mps", "conic", "lasso"), default=None,
                   help="input format (default: from the file suffix)")
    p.add_argument("--prune-rows", action="store_true",
                   help="drop dependent rows and columns fixed by singleton rows (MPS)")
    p.add_argument("--fixed-mps", action="store_true", help="read MPS in fixed-column layout")
    p.add_argument("--rhs", default=None, help="lasso: file with the vector b (default: synthetic from --seed)")
    p.add_argument("--seed", type=int, default=0, help="lasso: seed for the synthetic b")
    p.add_argument("--lasso-rho", type=_positive("--lasso-rho"), default=None, help="lasso: l1 weight override")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pfsnm", description="Path-following smoothing Newton method for symmetric-cone programs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one problem")
    _add_input_flags(s)
    _add_solver_flags(s)
    s.add_argument("--out", default=None, help="result JSON path (default: stdout)")
    s.add_argument("--trace", default=None, help="per-step trace CSV path")
    s.add_argument("--no-solution", action="store_true", help="omit x, s, lambda from the result JSON")

    c = sub.add_parser("convert", help="convert any input to conic JSON")
    _add_input_flags(c)
    c.add_argument("--out", required=True, help="output .json path")

    k = sub.add_parser("check", help="KKT residuals of a candidate (x, s, lambda)")
    _add_input_flags(k)
    k.add_argument("candidate", help="JSON with keys x, s, lambda (e.g. a solve result)")
    k.add_argument("--mu", type=_positive("--mu"), default=None, help="also report central-path residuals at mu")
    k.add_argument("--out", default=None)

    b = sub.add_parser("bench", help="run a suite and write one CSV row per instance")
    _add_input_flags(b, many=True)
    _add_solver_flags(b)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--label", default="", help="config label stored in the records")
    b.add_argument("--bench-time-limit", type=_positive("--bench-time-limit"), default=1000.0,
                   help="per-instance time limit (default 1000 s)")
    b.add_argument("--out", required=True, help="records CSV path")

    pr = sub.add_parser("profile", help="performance profile from bench record CSVs")
    pr.add_argument("records", nargs="+")
    pr.add_argument("--out", required=True)
    pr.add_argument("--time-limit", type=_positive("--time-limit"), default=1000.0,
                    help="time charged to unsolved instances in the SGM")

    sc = sub.add_parser("scaling", help="iteration-scaling study on random instances (certified mode)")
    sc.add_argument("--nu", type=int, nargs="+", default=[8, 32, 128, 512])
    sc.add_argument("--eps", type=_positive("--eps"), default=1e-8)
    sc.add_argument("--rho", type=_rho, default=1.0)
    sc.add_argument("--mu0", type=_positive("--mu0"), default=1.0)
    sc.add_argument("--seeds", type=int, nargs="+", default=[0])
    sc.add_argument("--kind", choices=("lp", "socp"), default="lp")
    sc.add_argument("--out", required=True)
    return p


def _config(args) -> SolverConfig:
    return SolverConfig(rho=args.rho, mu0=args.mu0, eps=args.eps, sigma=args.sigma,
                        max_outer=args.max_outer, max_inner=args.max_inner, max_phase1=args.max_phase1,
                        time_limit=args.time_limit, mu0_heuristic=args.mu0_heuristic)


def _load(args, path):
    from .io import load_problem
    return load_problem(path, args.format, prune=args.prune_rows, fixed_mps=args.fixed_mps,
                        rhs_path=args.rhs, seed=args.seed, lasso_rho=args.lasso_rho)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def write_trace_csv(trace: list[TraceRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in trace:
            w.writerow([getattr(r, c) for c in TRACE_COLUMNS])


def cmd_solve(args) -> tuple[int, dict]:
    cfg = _config(args)
    prob = _load(args, args.input)
    res = solve(prob, cfg)
    doc = res.to_dict(include_timing=False, include_solution=not args.no_solution)
    doc = {"instance": prob.name, **doc}
    if "recover" in prob.meta and not args.no_solution:
        from .io.mps import recover_original
        doc["x_original"] = recover_original(prob, res.x).tolist()
    _emit(json.dumps(_clean(doc), indent=1, sort_keys=True) + "\n", args.out)
    if args.trace:
        write_trace_csv(res.trace, args.trace)
    code = _STATUS_EXIT[res.status]
    return code, {"status": res.status.value, "objective": res.objective, "outer": res.outer_iters,
                  "steps": res.total_newton_steps}


def cmd_convert(args) -> tuple[int, dict]:
    from .io.conic_json import write_conic_json
    prob = _load(args, args.input)
    write_conic_json(prob, args.out)
    return EXIT_OK, {"status": "converted", "m": prob.m, "n": prob.n}


def check_candidate(prob, x, s, lam, mu=None) -> dict:
    cone = prob.cone
    rep = {
        "primal_residual": prob.primal_residual(x),
        "dual_residual": prob.dual_residual(s, lam),
        "gap": float(x @ s),
        "objective": prob.objective(x),
        "dual_objective": float(prob.b @ lam) + prob.objective_offset,
        "x_min_eigenvalue": float(cones.frame(cone, x).min_eigenvalue()),
        "s_min_eigenvalue": float(cones.frame(cone, s).min_eigenvalue()),
    }
    if mu is not None:
        e = cones.identity(cone)
        rep["jordan_residual"] = float(np.linalg.norm(cones.jordan_product(cone, x, s) - mu * e))
        if cones.in_interior(cone, x):
            rep["barrier_residual"] = float(np.linalg.norm(s + mu * cones.barrier_gradient(cone, x)))
    return rep


def cmd_check(args) -> tuple[int, dict]:
    prob = _load(args, args.input)
    try:
        cand = json.loads(Path(args.candidate).read_text())
        x, s, lam = (np.asarray(cand[k], dtype=float) for k in ("x", "s", "lambda"))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"{args.candidate}: cannot read candidate ({exc})") from None
    if x.shape != (prob.n,) or s.shape != (prob.n,) or lam.shape != (prob.m,):
        raise StructuralError(f"candidate shapes {x.shape}, {s.shape}, {lam.shape} do not match n={prob.n}, m={prob.m}")
    rep = check_candidate(prob, x, s, lam, args.mu)
    _emit(json.dumps(_clean(rep), indent=1, sort_keys=True) + "\n", args.out)
    return EXIT_OK, {"status": "checked", "primal": rep["primal_residual"], "dual": rep["dual_residual"],
                     "gap": rep["gap"]}


def cmd_bench(args) -> tuple[int, dict]:
    from .bench import run_suite, shifted_geometric_mean, write_records_csv
    cfg = _config(args)
    kw = dict(fmt=args.format, prune=args.prune_rows, fixed_mps=args.fixed_mps, rhs_path=args.rhs,
              seed=args.seed, lasso_rho=args.lasso_rho)
    recs = run_suite(args.inputs, cfg, time_limit_s=args.bench_time_limit, jobs=max(1, args.jobs),
                     label=args.label, **kw)
    write_records_csv(recs, args.out)
    solved = [r.solved for r in recs]
    sgm = shifted_geometric_mean([r.time_s for r in recs], solved, time_limit=args.bench_time_limit)
    return EXIT_OK, {"status": "bench", "instances": len(recs), "solved": sum(solved), "sgm_s": round(sgm, 6)}


def cmd_profile(args) -> tuple[int, dict]:
    from .bench import profile_from_records, read_records_csv, shifted_geometric_mean, write_profile_csv
    recs = []
    for path in args.records:
        try:
            recs += read_records_csv(path)
        except (OSError, KeyError, ValueError) as exc:
            raise ParseError(f"{path}: not a bench record CSV ({exc})") from None
    taus, prof, configs = profile_from_records(recs)
    write_profile_csv(taus, prof, configs, args.out)
    info = {"status": "profile", "configs": len(configs)}
    for cfg in configs:
        rs = [r for r in recs if r.config == cfg]
        info[f"sgm[{cfg or 'default'}]"] = round(shifted_geometric_mean(
            [r.time_s for r in rs], [r.solved for r in rs], time_limit=args.time_limit), 6)
    return EXIT_OK, info


def cmd_scaling(args) -> tuple[int, dict]:
    from .bench import scaling_study, write_scaling_csv
    cfg = SolverConfig(rho=args.rho, mu0=args.mu0, eps=args.eps, full_merits=False)
    fit = scaling_study(args.nu, args.eps, cfg, seeds=args.seeds, kind=args.kind)
    write_scaling_csv(fit, args.out)
    return EXIT_OK, {"status": "scaling", "slope": round(fit.slope, 6), "r2": round(fit.r2, 6),
                     "outer_exact": fit.outer_exact, "n_in_one": fit.single_step_recentering}


COMMANDS = {"solve": cmd_solve, "convert": cmd_convert, "check": cmd_check, "bench": cmd_bench,
            "profile": cmd_profile, "scaling": cmd_scaling}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "sigma", None) is not None and hasattr(args, "max_outer"):
            _config(args)  # validate flags before touching any file
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        print(_status_line(code=EXIT_USAGE, status="UsageError"))
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"pfsnm: {exc}", file=sys.stderr)
        print(_status_line(code=EXIT_USAGE, status="UsageError"))
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        code, info = COMMANDS[args.cmd](args)
    except (ParseError, StructuralError) as exc:
        print(f"pfsnm: {exc}", file=sys.stderr)
        code, info = EXIT_PARSE, {"status": type(exc).__name__}
    except ParameterError as exc:
        print(f"pfsnm: {exc}", file=sys.stderr)
        code, info = EXIT_USAGE, {"status": "UsageError"}
    except NumericalError as exc:
        print(f"pfsnm: {exc}", file=sys.stderr)
        code, info = EXIT_NUMERICAL, {"status": "NumericalError"}
    except OSError as exc:
        print(f"pfsnm: {exc}", file=sys.stderr)
        code, info = EXIT_PARSE, {"status": "IOError"}
    except PfsnmError as exc:
        print(f"pfsnm: {exc}", file=sys.stderr)
        code, info = EXIT_NUMERICAL, {"status": type(exc).__name__}
    print(_status_line(code=code, **info))
    return code


