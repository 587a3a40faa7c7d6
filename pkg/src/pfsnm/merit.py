"""Reduced SBAL function, its gradients and the merit functions delta and xi.

Everything is evaluated in x-coordinates: the null-space parametrization of
the primal affine set is never formed, projections onto ``ker A`` go through
the Schur matrices instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import cones
from .errors import NumericalError
from .kkt import SchurHandle, factorize, s_form, saddle_solve
from .problem import ProblemData
from .smoothing import SmoothingState, compute_smoothing

log = logging.getLogger(__name__)

RADICAND_TOL = 1e-14


def _root(q: float, what: str) -> float:
    if q < 0:
        if q < -RADICAND_TOL:
            raise NumericalError(f"negative radicand {q:.3e} in {what}")
        return 0.0
    return float(np.sqrt(q))


@dataclass(frozen=True)
class MeritReport:
    delta_x: float
    delta_s: float
    delta: float
    xi_x: float
    xi_s: float
    xi: float
    eta_value: float = float("nan")


def eta_value(prob: ProblemData, state: SmoothingState) -> float:
    res = prob.primal_residual(state.x)
    if res > 1e-9 * (1 + np.linalg.norm(prob.b)):
        log.warning("eta_value: primal residual %.2e at the evaluation point", res)
    r = state.z - state.x
    phi = cones.barrier_value(state.cone, state.z)
    return float(prob.c @ state.x + state.mu * phi + state.s @ r + 0.5 * state.rho * (r @ r))


def gradients(prob: ProblemData, state: SmoothingState) -> tuple[np.ndarray, np.ndarray]:
    """``(c - y, z - x)``; the first is an ambient representative of the x-gradient."""
    return prob.c - state.y, state.z - state.x


def project_kernel(prob: ProblemData, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto ``ker A``."""
    return v - prob.A.adjoint_apply(prob.A.gram_solve(prob.A.apply(v)))


def merit_delta(state: SmoothingState, dx: np.ndarray, ds: np.ndarray) -> tuple[float, float, float]:
    qx, qs = s_form(state, dx, ds)
    dxv = _root(qx / state.mu, "delta_x")
    dsv = _root(qs / state.mu, "delta_s")
    return dxv, dsv, float(np.hypot(dxv, dsv))


def aux_factor(prob: ProblemData, schur: SchurHandle) -> SchurHandle:
    """Factor of ``A W^-1 H A* = A W^-1 A* + A A*``."""
    return factorize(schur.matrix + prob.A.gram)


def merit_xi(prob: ProblemData, state: SmoothingState, schur: SchurHandle,
             lam: np.ndarray | None = None, aux: SchurHandle | None = None) -> tuple[float, float, float]:
    """Dual local norms of the two gradient blocks.

    When ``lam`` is given, ``c - y`` is replaced by ``c - A* lam - y``, which
    has the same projection onto ``ker A`` but avoids cancellation.
    """
    rho, mu = state.rho, state.mu
    r = state.z - state.x
    xi_s = _root(rho * float(r @ state.apply_H(r)) / mu, "xi_s")
    g = prob.c - state.y
    if lam is not None:
        g = g - prob.A.adjoint_apply(lam)
    if aux is None:
        aux = aux_factor(prob, schur)
    Winv_g = state.apply_Winv(g)
    nu = aux.solve(prob.A.apply(Winv_g + g))
    v = g - prob.A.adjoint_apply(nu)
    # <g, u> with u = rho^-1 W^-1 H v, written as a form in v since A u = 0
    q = float(v @ (state.apply_Winv(v) + v)) / (rho * mu)
    xi_x = _root(q, "xi_x")
    return xi_x, xi_s, float(np.hypot(xi_x, xi_s))


def merit_report(prob, state, schur, dx, ds, lam=None, with_eta=False) -> MeritReport:
    d = merit_delta(state, dx, ds)
    x = merit_xi(prob, state, schur, lam)
    eta = eta_value(prob, state) if with_eta else float("nan")
    return MeritReport(*d, *x, eta)


def dense_saddle_hessian(prob: ProblemData, state: SmoothingState) -> tuple[np.ndarray, np.ndarray]:
    """Dense Hessian of the reduced SBAL function in a null-space basis.

    Returns ``(K, B)`` where ``B`` has orthonormal columns spanning ``ker A``
    and ``K`` is the block matrix ``[[rho B* H^-1 W B, -B* H^-1 W], [-H^-1 W B, -H^-1/rho]]``.
    Test oracle only.
    """
    n = prob.n
    eye = np.eye(n)
    HinvW = np.column_stack([state.apply("HinvW", eye[:, k]) for k in range(n)])
    Hinv = np.column_stack([state.apply_Hinv(eye[:, k]) for k in range(n)])
    import scipy.linalg as sla
    B = sla.null_space(prob.A.dense)
    K = np.block([[state.rho * B.T @ HinvW @ B, -B.T @ HinvW], [-HinvW @ B, -Hinv / state.rho]])
    return K, B


# ---------------------------------------------------------------------------
# sensitivity in mu


@dataclass(frozen=True)
class SensitivityReport:
    lhs6: float
    rhs6: float
    lhs6_fd: float
    lhs7: float
    rhs7: float

    @property
    def slack6(self) -> float:
        return self.rhs6 - self.lhs6

    @property
    def slack7(self) -> float:
        return self.rhs7 - self.lhs7


def s_value(state: SmoothingState, hx, hs) -> float:
    """``S[h, h] = rho <hx, H^-1 W hx> + rho^-1 <hs, H^-1 hs>`` (no 1/mu factor)."""
    qx, qs = s_form(state, hx, hs)
    return qx + qs


def mu_sensitivity_checks(prob: ProblemData, state: SmoothingState, hx: np.ndarray, hs: np.ndarray,
                          check: bool = True) -> SensitivityReport:
    """Both sides of the mu-sensitivity bounds for the gradient and for ``S``.

    ``hx`` is projected onto ``ker A`` first. The gradient derivative uses the
    closed form ``(proj H^-1 grad phi(z), -rho^-1 H^-1 grad phi(z))`` and is
    cross-checked by a central difference in mu.
    """
    hx = project_kernel(prob, hx)
    mu, rho, nu = state.mu, state.rho, prob.cone.rank
    cone = prob.cone
    Hg = state.apply_Hinv(cones.barrier_gradient(cone, state.z))
    lhs6 = abs(float(hx @ Hg - hs @ Hg / rho))
    S = s_value(state, hx, hs)
    rhs6 = np.sqrt(2 * nu / mu) * np.sqrt(max(S, 0.0))

    step = 1e-5 * mu
    sp_ = compute_smoothing(cone, state.x, state.s, mu + step, rho)
    sm_ = compute_smoothing(cone, state.x, state.s, mu - step, rho)
    gp = gradients(prob, sp_)
    gm = gradients(prob, sm_)
    d_gx = (gp[0] - gm[0]) / (2 * step)
    d_gs = (gp[1] - gm[1]) / (2 * step)
    lhs6_fd = abs(float(hx @ d_gx + hs @ d_gs))

    dS = (s_value(sp_, hx, hs) - s_value(sm_, hx, hs)) / (2 * step)
    lhs7 = abs(dS)
    rhs7 = rho * (1 + 2 * np.sqrt(nu)) / mu * S
    rep = SensitivityReport(lhs6, float(rhs6), lhs6_fd, lhs7, float(rhs7))
    if check:
        tol = 1e-9
        if rep.slack6 < -tol * (1 + rep.rhs6) or rep.slack7 < -tol * (1 + rep.rhs7):
            raise AssertionError(f"mu-sensitivity bound violated: {rep}")
    return rep
