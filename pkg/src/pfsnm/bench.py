"""Batch runs, shifted geometric means, performance profiles and the iteration-scaling fit."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import PfsnmError
from .instances import random_lp, random_socp
from .problem import ProblemData
from .solver import SolverConfig, Status, predicted_outer_iters, solve

DEFAULT_TAUS = np.geomspace(1.0, 100.0, 200)


@dataclass
class BenchRecord:
    instance: str
    status: str
    time_s: float
    outer_iters: int
    total_newton_steps: int
    phase1_steps: int
    objective: float
    primal_res: float
    dual_res: float
    phi_norm: float
    gap: float
    config: str = ""
    message: str = ""

    @property
    def solved(self) -> bool:
        return self.status == Status.OPTIMAL.value


def _solve_one(args) -> BenchRecord:
    name, source, config, label, loader_kw = args
    t0 = time.perf_counter()
    try:
        if isinstance(source, ProblemData):
            prob = source
        else:
            from .io import load_problem
            prob = load_problem(source, **loader_kw)
        res = solve(prob, config)
    except PfsnmError as exc:
        return BenchRecord(name, Status.NUMERICAL_ERROR.value, time.perf_counter() - t0, 0, 0, 0,
                           math.nan, math.nan, math.nan, math.nan, math.nan, label, f"{type(exc).__name__}: {exc}")
    elapsed = time.perf_counter() - t0
    r = res.residuals
    return BenchRecord(name, res.status.value, elapsed, res.outer_iters, res.total_newton_steps, res.phase1_steps,
                       res.objective, r["primal"], r["dual"], r["phi_norm"], r["gap"], label, res.message)


def run_suite(instances: Iterable, config: SolverConfig | None = None, time_limit_s: float = 1000.0,
              jobs: int = 1, label: str = "", **loader_kw) -> list[BenchRecord]:
    """Solve every instance; failures come back as records, never as exceptions.

    ``instances`` holds ``ProblemData`` objects, paths, or ``(name, problem_or_path)`` pairs.
    """
    config = replace(config or SolverConfig(), time_limit=time_limit_s)
    tasks = []
    for item in instances:
        if isinstance(item, tuple):
            name, src = item
        elif isinstance(item, ProblemData):
            name, src = item.name, item
        else:
            name, src = Path(item).stem, str(item)
        tasks.append((name, src, config, label, loader_kw))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_solve_one, tasks))
    return [_solve_one(t) for t in tasks]


def shifted_geometric_mean(times: Sequence[float], solved: Sequence[bool] | None = None,
                           offset: float = 1.0, time_limit: float | None = None) -> float:
    """``exp(mean(ln(max(1, t + offset)))) - offset``; unsolved entries count as ``time_limit``."""
    t = np.asarray(times, dtype=float)
    if t.size == 0:
        raise ValueError("shifted geometric mean of an empty list is undefined")
    if solved is not None:
        mask = ~np.asarray(solved, dtype=bool)
        if mask.any():
            if time_limit is None:
                raise ValueError("unsolved entries need a time_limit")
            t = np.where(mask, time_limit, t)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("times must be finite and nonnegative")
    return float(np.exp(np.mean(np.log(np.maximum(1.0, t + offset)))) - offset)


def performance_ratios(times: np.ndarray, solved: np.ndarray | None = None) -> np.ndarray:
    """``r[p, s] = t[p, s] / min_s t[p, s]`` over solved entries, ``inf`` for failures."""
    t = np.asarray(times, dtype=float)
    ok = np.isfinite(t) if solved is None else (np.asarray(solved, dtype=bool) & np.isfinite(t))
    t = np.where(ok, t, np.inf)
    best = t.min(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(ok, t / best, np.inf)
    # best time 0: the fastest config gets ratio 1, others with time 0 too
    r[np.isnan(r)] = 1.0
    return r


def profile_from_ratios(ratios, taus=DEFAULT_TAUS) -> np.ndarray:
    """``rho_s(tau)``: fraction of instances with ``r[p, s] <= tau``; shape ``(len(taus), n_configs)``."""
    r = np.asarray(ratios, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    taus = np.asarray(taus, dtype=float)
    return (r[None, :, :] <= taus[:, None, None]).mean(axis=1)


def performance_profile(times, solved=None, taus=DEFAULT_TAUS) -> tuple[np.ndarray, np.ndarray]:
    taus = np.asarray(taus, dtype=float)
    return taus, profile_from_ratios(performance_ratios(times, solved), taus)


# ---------------------------------------------------------------------------
# iteration scaling


@dataclass
class ScalingRow:
    nu: int
    seed: int
    kind: str
    m: int
    outer_iters: int
    predicted_outer: int
    total_newton_steps: int
    max_inner_after_first: int
    x_value: float  # sqrt(nu) * ln(mu0 / eps)
    status: str
    time_s: float
    gap: float


@dataclass
class ScalingFit:
    slope: float
    r2: float
    rows: list

    @property
    def outer_exact(self) -> bool:
        return all(r.outer_iters == r.predicted_outer for r in self.rows)

    @property
    def single_step_recentering(self) -> bool:
        return all(r.max_inner_after_first <= 1 for r in self.rows)


def fit_through_origin(x, y) -> tuple[float, float]:
    """Least-squares slope of ``y = a x`` and the (centered) coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = float(x @ y / (x @ x))
    ss_res = float(np.sum((y - a * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return a, r2


def make_instance(kind: str, nu: int, rng: np.random.Generator, m: int | None = None) -> ProblemData:
    if kind == "lp":
        return random_lp(nu, rng, m=m if m is not None else max(1, nu // 4))
    if kind == "socp":
        return random_socp(nu, rng, m=m if m is not None else max(1, nu // 4))
    raise ValueError(f"unknown instance kind {kind!r}")


def scaling_study(nu_list: Sequence[int], eps: float = 1e-8, config: SolverConfig | None = None,
                  seeds: Sequence[int] = (0,), kind: str = "lp") -> ScalingFit:
    """Solve random strictly feasible instances and fit total Newton steps against ``sqrt(nu) ln(mu0/eps)``."""
    base = config or SolverConfig(full_merits=False)
    cfg = replace(base, eps=eps)
    if not cfg.certified:
        raise ValueError("the scaling study runs in certified mode")
    rows = []
    for nu in nu_list:
        for seed in seeds:
            rng = np.random.default_rng([int(nu), int(seed)])
            prob = make_instance(kind, int(nu), rng)
            nu_eff = prob.cone.rank
            t0 = time.perf_counter()
            res = solve(prob, cfg)
            elapsed = time.perf_counter() - t0
            sigma = cfg.sigma_for(nu_eff)
            rows.append(ScalingRow(
                nu_eff, int(seed), kind, prob.m, res.outer_iters, predicted_outer_iters(cfg.mu0, eps, sigma),
                res.total_newton_steps, max(res.inner_counts[1:], default=0),
                math.sqrt(nu_eff) * math.log(cfg.mu0 / eps), res.status.value, elapsed, res.residuals["gap"]))
    a, r2 = fit_through_origin([r.x_value for r in rows], [r.total_newton_steps for r in rows])
    return ScalingFit(a, r2, rows)


# ---------------------------------------------------------------------------
# CSV


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_records_csv(records: Sequence[BenchRecord], path) -> None:
    names = [f.name for f in fields(BenchRecord)]
    _write_rows(path, names, ([getattr(r, k) for k in names] for r in records))


def read_records_csv(path) -> list[BenchRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for f in fields(BenchRecord):
                v = row[f.name]
                kw[f.name] = int(v) if f.type == "int" else float(v) if f.type == "float" else v
            out.append(BenchRecord(**kw))
    return out


def write_profile_csv(taus, profile, configs: Sequence[str], path) -> None:
    rows = ((repr(float(t)), cfg, repr(float(profile[i, j]))) for i, t in enumerate(taus) for j, cfg in enumerate(configs))
    _write_rows(path, ["tau", "config", "rho"], rows)


def write_scaling_csv(fit: ScalingFit, path) -> None:
    names = [f.name for f in fields(ScalingRow)]
    _write_rows(path, names, ([getattr(r, k) for k in names] for r in fit.rows))
    summary = Path(path).with_name(Path(path).stem + "_fit.csv")
    _write_rows(summary, ["slope", "r2", "outer_exact", "single_step_recentering"],
                [[fit.slope, fit.r2, fit.outer_exact, fit.single_step_recentering]])


def profile_from_records(records: Sequence[BenchRecord], taus=DEFAULT_TAUS):
    """Profiles over configs from a flat record list (instances matched by name)."""
    configs = sorted({r.config for r in records})
    names = sorted({r.instance for r in records})
    t = np.full((len(names), len(configs)), np.inf)
    for r in records:
        if r.solved:
            t[names.index(r.instance), configs.index(r.config)] = r.time_s
    taus, prof = performance_profile(t, taus=taus)
    return taus, prof, configs


__all__ = ["BenchRecord", "run_suite", "shifted_geometric_mean", "performance_ratios", "profile_from_ratios",
           "performance_profile", "scaling_study", "fit_through_origin", "ScalingFit", "ScalingRow",
           "write_records_csv", "read_records_csv", "write_profile_csv", "write_scaling_csv",
           "profile_from_records", "make_instance", "DEFAULT_TAUS"]
