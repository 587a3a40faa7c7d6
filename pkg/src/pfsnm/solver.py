"""Two-phase path-following smoothing Newton driver.

Phase 1 moves the least-squares starting triple into the neighborhood
``xi <= kappa`` at ``mu0`` by a homotopy on the gradient: the residual is
shifted by ``t`` times the frozen initial gradient and ``t`` is driven to 0.
Phase 2 shrinks ``mu`` geometrically and recenters with full Newton steps.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .errors import NumericalError, ParameterError
from .kkt import SchurHandle, assemble_schur, newton_step, saddle_solve, s_norm
from .merit import aux_factor, merit_delta, merit_xi
from .problem import ProblemData
from .smoothing import SmoothingState, check_parameters, compute_smoothing

log = logging.getLogger(__name__)

KAPPA = 0.1
# relative |Ax - b| above which the iterates are declared numerically lost
DRIFT_TOL = 1e-6
# relative residual bound an Optimal result must meet
CERT_TOL = 1e-8


class Status(str, Enum):
    OPTIMAL = "Optimal"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_ERROR = "NumericalError"
    INFEASIBLE_SUSPECT = "InfeasibleSuspect"


def certified_sigma(nu: int, rho: float = 1.0, kappa: float = KAPPA) -> float:
    """Largest shrink factor for which one Newton step recenters."""
    gamma = (2 * kappa + math.sqrt(2) / rho) / (kappa + math.sqrt(2) / rho)
    lg = math.log(gamma)
    return 1.0 - lg / (2 * rho * math.sqrt(nu) + lg)


def predicted_outer_iters(mu0: float, eps: float, sigma: float) -> int:
    if mu0 <= eps:
        return 0
    return math.ceil(math.log(mu0 / eps) / math.log(1 / sigma))


@dataclass
class SolverConfig:
    rho: float = 1.0
    mu0: float = 1.0
    eps: float = 1e-8
    sigma: str | float = "certified"
    max_outer: int = 100_000
    max_inner: int = 50
    max_phase1: int = 1000
    time_limit: float | None = None
    mu0_heuristic: bool = False
    # compute xi before every step as well as after (doubles merit cost)
    full_merits: bool = True
    divergence_bound: float = 1e12

    def __post_init__(self):
        check_parameters(self.mu0, self.rho)
        if not (self.eps > 0):
            raise ParameterError(f"eps must be positive, got {self.eps}")
        if isinstance(self.sigma, str):
            if self.sigma != "certified":
                try:
                    self.sigma = float(self.sigma)
                except ValueError:
                    raise ParameterError(f"sigma must be 'certified' or a number in (0,1), got {self.sigma!r}") from None
        if not isinstance(self.sigma, str) and not (0 < self.sigma < 1):
            raise ParameterError(f"sigma must lie in (0, 1), got {self.sigma}")
        for name in ("max_outer", "max_inner", "max_phase1"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be >= 1")

    @property
    def kappa(self) -> float:
        return KAPPA

    @property
    def certified(self) -> bool:
        return self.sigma == "certified"

    def sigma_for(self, nu: int) -> float:
        return certified_sigma(nu, self.rho) if self.certified else float(self.sigma)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kappa"] = KAPPA
        return d


@dataclass
class TraceRecord:
    phase: int
    k: int
    j: int
    mu: float
    delta: float
    xi_pre: float
    xi: float
    primal_res: float
    dual_res: float
    phi_norm: float
    time_s: float
    t: float = 0.0
    alpha: float = float("nan")


@dataclass
class SolveResult:
    x: np.ndarray
    s: np.ndarray
    lam: np.ndarray
    status: Status
    outer_iters: int = 0
    total_newton_steps: int = 0
    phase1_steps: int = 0
    mu_final: float = float("nan")
    xi_final: float = float("nan")
    sigma: float = float("nan")
    objective: float = float("nan")
    residuals: dict = field(default_factory=dict)
    inner_counts: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    message: str = ""
    diverging: bool = False
    config: SolverConfig | None = None

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    def to_dict(self, include_timing: bool = False, include_solution: bool = True) -> dict:
        d = {
            "status": self.status.value,
            "objective": self.objective,
            "outer_iters": self.outer_iters,
            "total_newton_steps": self.total_newton_steps,
            "phase1_steps": self.phase1_steps,
            "mu_final": self.mu_final,
            "xi_final": self.xi_final,
            "sigma": self.sigma,
            "residuals": dict(self.residuals),
            "diverging": self.diverging,
            "message": self.message,
            "config": self.config.to_dict() if self.config else None,
        }
        if include_solution:
            d["x"] = self.x.tolist()
            d["s"] = self.s.tolist()
            d["lambda"] = self.lam.tolist()
        if include_timing:
            d["timings"] = dict(self.timings)
        return d


def initialize(prob: ProblemData):
    """Least-squares triple: min-norm x with Ax = b, and s = c - A* lam with lam fitted to c."""
    A = prob.A
    x = A.adjoint_apply(A.gram_solve(prob.b))
    lam = A.gram_solve(A.apply(prob.c))
    s = prob.c - A.adjoint_apply(lam)
    return x, s, lam


class _Evaluator:
    """Builds the smoothing state and Schur factor for an iterate."""

    def __init__(self, prob: ProblemData, rho: float):
        self.prob, self.rho = prob, rho

    def state(self, x, s, mu) -> tuple[SmoothingState, SchurHandle]:
        st = compute_smoothing(self.prob.cone, x, s, mu, self.rho)
        return st, assemble_schur(self.prob, st)

    def xi(self, st, schur, lam) -> float:
        return merit_xi(self.prob, st, schur, lam, aux_factor(self.prob, schur))[2]


class _Stop(Exception):
    def __init__(self, status, message, diverging=False):
        super().__init__(message)
        self.status, self.message, self.diverging = status, message, diverging


class PfsnmSolver:
    def __init__(self, prob: ProblemData, config: SolverConfig | None = None):
        self.prob = prob
        self.config = config or SolverConfig()
        self.ev = _Evaluator(prob, self.config.rho)
        self.trace: list[TraceRecord] = []
        self._t0 = 0.0

    # -- helpers ---------------------------------------------------------

    def _elapsed(self) -> float:
        return time.perf_counter() - self._t0

    def _guard(self, x, s):
        cfg = self.config
        if cfg.time_limit is not None and self._elapsed() > cfg.time_limit:
            raise _Stop(Status.ITERATION_LIMIT, f"time limit {cfg.time_limit}s reached")
        bound = cfg.divergence_bound * self.prob.scale
        nx, ns = np.linalg.norm(x), np.linalg.norm(s)
        if not (np.isfinite(nx) and np.isfinite(ns)):
            raise _Stop(Status.NUMERICAL_ERROR, "non-finite iterate")
        if nx > bound:
            raise _Stop(Status.ITERATION_LIMIT, f"|x| = {nx:.3e} diverging (unbounded problem suspected)", True)
        if ns > bound:
            raise _Stop(Status.INFEASIBLE_SUSPECT, f"|s| = {ns:.3e} diverging (primal infeasibility suspected)", True)
        # Newton steps keep Ax = b exactly in exact arithmetic; drift means cancellation
        res = self.prob.primal_residual(x)
        if res > DRIFT_TOL * self.prob.scale:
            raise NumericalError(f"iterates lost primal feasibility (|Ax - b| = {res:.3e})")

    def _step(self, st, r, schur):
        dx, ds, dlam = newton_step(self.prob, st, r, schur)
        # A dx = 0 holds in exact arithmetic; long steps amplify the Schur solve error.
        # Project back in the W metric so coordinates with tiny z get tiny corrections
        # (a Euclidean projection spreads the fix evenly and wrecks them).
        A = self.prob.A
        for _ in range(2):
            dx = dx - st.apply_Winv(A.adjoint_apply(schur.solve(A.apply(dx))))
        return dx, ds, dlam

    def _record(self, phase, k, j, mu, delta, xi_pre, xi, x, s, lam, st_post, t=0.0, alpha=float("nan")):
        prob = self.prob
        self.trace.append(TraceRecord(
            phase, k, j, mu, delta, xi_pre, xi,
            prob.primal_residual(x), prob.dual_residual(s, lam),
            float(2 * np.linalg.norm(st_post.x - st_post.z)), self._elapsed(), t, alpha))

    # -- phases ----------------------------------------------------------

    def phase1(self, x, s, lam, mu):
        cfg, prob, ev = self.config, self.prob, self.ev
        kappa = KAPPA
        st, schur = ev.state(x, s, mu)
        # frozen gradient at the starting point
        g0x, g0s = prob.c - st.y, st.z - st.x
        r0 = st.z - st.x
        dx, ds, dlam = self._step(st, r0, schur)
        delta = merit_delta(st, dx, ds)[2]
        t = max(0.0, 1.0 - kappa / (2 * delta)) if delta > 0 else 0.0
        for j in range(cfg.max_phase1):
            self._guard(x, s)
            if j > 0:
                dx, ds, dlam = self._step(st, st.z - st.x, schur)
                delta = merit_delta(st, dx, ds)[2]
            xi_pre = ev.xi(st, schur, lam) if cfg.full_merits else float("nan")
            if delta <= kappa:
                x, s, lam = x + dx, s + ds, lam + dlam
                st, schur = ev.state(x, s, mu)
                xi = ev.xi(st, schur, lam)
                self._record(1, -1, j, mu, delta, xi_pre, xi, x, s, lam, st, t)
                return x, s, lam, st, schur, xi, j + 1
            gx, gs = saddle_solve(prob, st, g0x, g0s, schur)
            nrm = s_norm(st, gx, gs)
            alpha = min(kappa / (4 * t * nrm), 1.0) if t > 0 and nrm > 0 else 1.0
            t = (1 - alpha) * t
            r = (st.z - st.x) - t * r0
            dx, ds, dlam = self._step(st, r, schur)
            x, s, lam = x + dx, s + ds, lam + dlam
            st, schur = ev.state(x, s, mu)
            self._last = (x, s, lam)
            self._record(1, -1, j, mu, delta, xi_pre, float("nan"), x, s, lam, st, t, alpha)
        raise _Stop(Status.ITERATION_LIMIT, f"phase 1 did not reach the neighborhood in {cfg.max_phase1} steps")

    def phase2(self, x, s, lam, st, schur, sigma):
        cfg, ev, mu0 = self.config, self.ev, self.mu0
        k = 0
        mu = mu0
        steps = 0
        inner_counts = []
        xi = float("nan")
        fresh = True  # st/schur belong to (x, s, mu)
        while True:
            j = 0
            while True:
                self._guard(x, s)
                if not fresh:
                    st, schur = ev.state(x, s, mu)
                if j > 0:
                    xi_pre = xi  # same point and mu as the previous post-step value
                else:
                    xi_pre = ev.xi(st, schur, lam) if cfg.full_merits else float("nan")
                dx, ds, dlam = self._step(st, st.z - st.x, schur)
                delta = merit_delta(st, dx, ds)[2]
                x, s, lam = x + dx, s + ds, lam + dlam
                st, schur = ev.state(x, s, mu)
                fresh = True
                xi = ev.xi(st, schur, lam)
                steps += 1
                self._record(2, k, j, mu, delta, xi_pre, xi, x, s, lam, st)
                j += 1
                if xi <= KAPPA:
                    break
                if j >= cfg.max_inner:
                    self._partial = (x, s, lam, k, steps, inner_counts, mu, xi, st)
                    raise NumericalError(f"recentering needed more than {cfg.max_inner} Newton steps at mu={mu:.3e}")
            inner_counts.append(j)
            self._partial = (x, s, lam, k, steps, inner_counts, mu, xi, st)
            if mu <= cfg.eps:
                return x, s, lam, k, steps, inner_counts, mu, xi, st
            if k >= cfg.max_outer:
                raise _Stop(Status.ITERATION_LIMIT, f"max_outer={cfg.max_outer} reached at mu={mu:.3e}")
            k += 1
            mu = mu0 * sigma**k
            fresh = False

    # -- driver ----------------------------------------------------------

    def solve(self) -> SolveResult:
        cfg, prob = self.config, self.prob
        self._t0 = time.perf_counter()
        self.trace = []
        self._partial = None
        self._last = None
        nu = prob.cone.rank
        sigma = cfg.sigma_for(nu)
        prob.certify()
        x, s, lam = initialize(prob)
        self.mu0 = cfg.mu0
        if cfg.mu0_heuristic:
            self.mu0 = max(1.0, float(x @ np.maximum(s, 0.0)) / nu)
        res = SolveResult(x, s, lam, Status.NUMERICAL_ERROR, sigma=sigma, config=cfg)
        t1 = time.perf_counter()
        phase1_steps = 0
        try:
            x, s, lam, st, schur, xi, phase1_steps = self.phase1(x, s, lam, self.mu0)
            res.phase1_steps = phase1_steps
            res.timings["phase1_s"] = time.perf_counter() - t1
            if xi > KAPPA:
                raise NumericalError(f"phase 1 ended with xi = {xi:.3e} > kappa")
            out = self.phase2(x, s, lam, st, schur, sigma)
            x, s, lam, k, steps, inner, mu, xi, st = out
            res.status = Status.OPTIMAL
            res.message = "converged"
        except _Stop as stop:
            res.status, res.message, res.diverging = stop.status, stop.message, stop.diverging
            log.info("solve stopped: %s", stop.message)
        except NumericalError as exc:
            res.status, res.message = Status.NUMERICAL_ERROR, str(exc)
            log.info("numerical error: %s", exc)
        if self._partial is not None:
            x, s, lam, k, steps, inner, mu, xi, st = self._partial
            res.outer_iters, res.inner_counts = k, list(inner)
            res.total_newton_steps = steps + phase1_steps
            res.mu_final, res.xi_final = mu, xi
            res.residuals["phi_norm"] = float(2 * np.linalg.norm(st.x - st.z))
        elif self.trace:
            res.phase1_steps = len(self.trace)
            if self._last is not None:
                x, s, lam = self._last
        # an unbounded direction shows up as |x| growth even when the stop was numerical
        if res.status in (Status.NUMERICAL_ERROR, Status.ITERATION_LIMIT) and not res.diverging \
                and self.trace and np.linalg.norm(x) > 1e6 * prob.scale:
            res.status, res.diverging = Status.ITERATION_LIMIT, True
            res.message += "; |x| diverging"
        res.x, res.s, res.lam = x, s, lam
        res.phase1_steps = res.phase1_steps or phase1_steps
        res.objective = prob.objective(x)
        res.residuals.setdefault("phi_norm", float("nan"))  # no phase-2 state to measure
        res.residuals.update({
            "primal": prob.primal_residual(x),
            "dual": prob.dual_residual(s, lam),
            "gap": float(x @ s),
        })
        if res.status is Status.OPTIMAL:
            bad = certificate_failures(prob, res, cfg)
            if bad:
                res.status = Status.NUMERICAL_ERROR
                res.message = "converged but certificate check failed: " + "; ".join(bad)
        res.trace = self.trace
        res.timings["total_s"] = time.perf_counter() - self._t0
        return res


def certificate_failures(prob: ProblemData, res: SolveResult, cfg: SolverConfig) -> list[str]:
    """Termination certificates an Optimal result must satisfy; returns the violated ones."""
    out = []
    tol = CERT_TOL * prob.scale
    if not res.residuals["primal"] <= tol:
        out.append(f"primal residual {res.residuals['primal']:.3e} > {tol:.3e}")
    if not res.residuals["dual"] <= tol:
        out.append(f"dual residual {res.residuals['dual']:.3e} > {tol:.3e}")
    phi_tol = 2 * math.sqrt(cfg.eps / cfg.rho) * KAPPA * (1 + float(np.linalg.norm(res.x)))
    if not res.residuals["phi_norm"] <= phi_tol:
        out.append(f"|Phi| {res.residuals['phi_norm']:.3e} > {phi_tol:.3e}")
    gap_tol = 2 * prob.cone.rank * cfg.eps
    if not res.residuals["gap"] <= gap_tol:
        out.append(f"gap {res.residuals['gap']:.3e} > {gap_tol:.3e}")
    return out


def solve(prob: ProblemData, config: SolverConfig | None = None) -> SolveResult:
    return PfsnmSolver(prob, config).solve()
