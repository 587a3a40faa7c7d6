"""Schur complement assembly and the Newton / saddle-point solves.

The Newton system at a primal-dual feasible iterate is

    A dx = 0,   ds + A* dlam = 0,   H^-1 W dx + rho^-1 H^-1 ds = r,

with ``r = z - x`` (or a shifted residual in phase 1). Eliminating ``dx`` and
``ds`` leaves ``M dlam = -rho A W^-1 H r`` with ``M = A W^-1 A*``, which is
assembled per cone family in closed form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import cones
from .errors import NumericalError
from .problem import ProblemData
from .smoothing import SmoothingState

log = logging.getLogger(__name__)

REG_LADDER = (1e-14, 1e-12, 1e-10)


@dataclass(frozen=True)
class SchurHandle:
    matrix: np.ndarray
    factor: tuple
    regularization_used: float

    def solve(self, v: np.ndarray) -> np.ndarray:
        return sla.cho_solve(self.factor, v, check_finite=False)

    @property
    def min_pivot(self) -> float:
        return float(np.min(np.diag(self.factor[0])) ** 2)

    def factor_residual(self) -> float:
        L = np.tril(self.factor[0])
        return float(np.linalg.norm(self.matrix - L @ L.T) / max(np.linalg.norm(self.matrix), 1e-300))


def factorize(M: np.ndarray) -> SchurHandle:
    """Cholesky with an escalating diagonal shift on failure."""
    M = 0.5 * (M + M.T)
    if not np.all(np.isfinite(M)):
        raise NumericalError("Schur matrix has non-finite entries")
    norm = np.abs(M).sum(axis=1).max()
    for reg in (0.0,) + REG_LADDER:
        shift = reg * norm
        try:
            fac = sla.cho_factor(M + shift * np.eye(M.shape[0]) if shift else M, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        if shift:
            log.debug("Schur factorization needed shift %.1e*|M|", reg)
        return SchurHandle(M, fac, shift)
    d = np.linalg.eigvalsh(M)
    raise NumericalError(f"Schur factorization failed after regularization; min eigenvalue {d.min():.3e}")


def assemble_schur(prob: ProblemData, state: SmoothingState) -> SchurHandle:
    """``A W^-1 A*`` from the per-family closed forms, then factorized."""
    return factorize(schur_matrix(prob, state))


def schur_matrix(prob: ProblemData, state: SmoothingState) -> np.ndarray:
    parts = prob.schur_layout
    lay = prob.cone.layout
    z = state.z
    scale = state.rho / state.mu
    m = prob.m
    M = np.zeros((m, m))
    Ao = parts["A_orth"]
    if Ao.shape[1]:
        M += (Ao * z[lay.orth] ** 2) @ Ao.T
    if lay.soc_heads.size:
        fr = state.zframe
        dets = fr.lam1 * fr.lam2
        As = parts["A_soc"]
        U = np.add.reduceat(As * z[parts["soc_all"]], parts["soc_starts"], axis=1)
        coord_det = np.repeat(dets, parts["soc_sizes"])
        Ah = parts["A_heads"]
        M += U @ U.T + (As * (0.5 * coord_det)) @ As.T - (Ah * dets) @ Ah.T
    for (off, n, Ab), (w, Q) in zip(parts["A_psd"], state.zframe.psd):
        Z = (Q * w) @ Q.T
        Amats = cones.smat(Ab, n)  # (m, n, n)
        M += Ab @ cones.svec(Z @ Amats @ Z).T
    return scale * M


def dense_schur_oracle(prob: ProblemData, state: SmoothingState) -> np.ndarray:
    """``A W^-1 A*`` with ``W^-1`` materialized column by column from the Hessian inverse."""
    cone = prob.cone
    Winv = (state.rho / state.mu) * cones.dense_operator(cone, lambda h: cones.hessian_inv_apply(cone, state.z, h))
    Ad = prob.A.dense
    return Ad @ Winv @ Ad.T


def newton_step(prob: ProblemData, state: SmoothingState, r: np.ndarray, schur: SchurHandle):
    """Solve the reduced Newton system for residual ``r``; returns ``(dx, ds, dlam)``."""
    rho = state.rho
    Winv_r = state.apply_Winv(r)
    WinvH_r = Winv_r + r
    dlam = schur.solve(-rho * prob.A.apply(WinvH_r))
    ds = -prob.A.adjoint_apply(dlam)
    dx = WinvH_r - state.apply_Winv(ds) / rho
    return dx, ds, dlam


def newton_residuals(prob: ProblemData, state: SmoothingState, r, dx, ds, dlam) -> tuple[float, float, float]:
    """Norms of the three block equations of the Newton system."""
    e1 = np.linalg.norm(prob.A.apply(dx))
    e2 = np.linalg.norm(ds + prob.A.adjoint_apply(dlam))
    e3 = np.linalg.norm(state.apply("HinvW", dx) + state.apply_Hinv(ds) / state.rho - r)
    return float(e1), float(e2), float(e3)


def saddle_solve(prob: ProblemData, state: SmoothingState, g_x: np.ndarray, g_s: np.ndarray, schur: SchurHandle):
    """Solve ``D^2 eta [dx, ds] = (g_x, g_s)`` on ``ker A x E``.

    The x-equation holds modulo ``range A*``: ``rho H^-1 W dx - H^-1 W ds + A* nu = g_x``.
    With ``g = -grad eta = (-(c - y), -(z - x))`` the result is the Newton
    direction, and ``nu`` relates to that step's ``dlam`` by ``dlam = -nu``
    up to the dual-feasible part of ``g_x``.
    """
    rho = state.rho
    nu = schur.solve(prob.A.apply(state.apply_Winv(g_x)) - rho * prob.A.apply(g_s))
    dx = state.apply_Winv(g_x - prob.A.adjoint_apply(nu)) / rho - g_s
    ds = -rho * state.apply_W(dx) - rho * state.apply_H(g_s)
    return dx, ds


def s_form(state: SmoothingState, dx: np.ndarray, ds: np.ndarray) -> tuple[float, float]:
    """The two halves ``rho <dx, H^-1 W dx>`` and ``rho^-1 <ds, H^-1 ds>`` of ``S[h, h]``."""
    qx = state.rho * float(dx @ state.apply("HinvW", dx))
    qs = float(ds @ state.apply_Hinv(ds)) / state.rho
    return qx, qs


def s_norm(state: SmoothingState, dx: np.ndarray, ds: np.ndarray) -> float:
    qx, qs = s_form(state, dx, ds)
    return float(np.sqrt(max(qx + qs, 0.0) / state.mu))
