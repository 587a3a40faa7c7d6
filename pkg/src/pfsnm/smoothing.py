"""Smoothing proximal map z(x, s; mu) and the operators built from it.

For ``u = rho*x - s`` the map is

    z = (u + ((u)^2 + 4 rho mu e)^(1/2)) / (2 rho),

computed in the spectral frame of ``u``. ``z`` is the unique minimizer of
``mu*phi(z) + <s, z> + (rho/2)|z - x|^2``, so it is always interior. On SOC
blocks the barrier gradient carries a factor 2 (see ``cones``), so there the
same formula is used with ``2 mu`` in place of ``mu``.

``W = (mu/rho) D^2 phi(z)`` and ``H = I + W`` share the frame of ``z``: on each
Peirce component they act as a scalar kernel, which makes all four operators
(and their inverses) cheap to apply.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import cones
from .cones import ConeSpec, Frame
from .errors import ParameterError

log = logging.getLogger(__name__)

# scalar kernels as functions of the W eigenvalue omega
_KERNELS = {
    "W": lambda w: w,
    "H": lambda w: 1.0 + w,
    "Winv": lambda w: 1.0 / w,
    "Hinv": lambda w: 1.0 / (1.0 + w),
    "HinvW": lambda w: w / (1.0 + w),
}


def _zmap(lam: np.ndarray, rho: float, mu: float) -> np.ndarray:
    if lam.size == 0:
        return lam
    root = np.hypot(lam, 2.0 * np.sqrt(rho * mu))
    # cancellation-free branch for negative eigenvalues
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(lam >= 0, (lam + root) / (2.0 * rho), 2.0 * mu / (root - lam))


def check_parameters(mu: float, rho: float) -> None:
    if not np.isfinite(mu) or mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    if not np.isfinite(rho) or rho < 1:
        raise ParameterError(f"rho must be >= 1, got {rho}")


@dataclass(frozen=True)
class SmoothingState:
    cone: ConeSpec
    x: np.ndarray
    s: np.ndarray
    mu: float
    rho: float
    z: np.ndarray
    y: np.ndarray
    zframe: Frame

    @cached_property
    def det_z(self) -> np.ndarray:
        return cones.det(self.cone, self.z)[0]

    @cached_property
    def _omega(self):
        """Eigenvalues of W on each Peirce component of the frame of z."""
        c = self.mu / self.rho
        fr = self.zframe
        orth = c / fr.orth**2
        soc = (2 * c / fr.lam1**2, 2 * c / fr.lam2**2, 2 * c / (fr.lam1 * fr.lam2))
        psd = tuple((c / np.outer(w, w), Q) for w, Q in fr.psd)
        return orth, soc, psd

    def apply(self, kind: str, h: np.ndarray) -> np.ndarray:
        """Apply one of ``W, H, Winv, Hinv, HinvW`` to ``h``."""
        k = _KERNELS[kind]
        cone = self.cone
        lay = cone.layout
        h = cone.check(h)
        orth, (w11, w22, w12), psd = self._omega
        out = np.empty(cone.dim)
        out[lay.orth] = k(orth) * h[lay.orth]
        if lay.soc_heads.size:
            tb = lay.soc_tail_block
            u = self.zframe.u
            p = h[lay.soc_heads]
            ht = h[lay.soc_tail]
            q = cones._soc_sum(cone, u * ht)
            a = k(w11) * (p + q) / 2
            b = k(w22) * (p - q) / 2
            out[lay.soc_heads] = a + b
            out[lay.soc_tail] = (a - b)[tb] * u + k(w12)[tb] * (ht - q[tb] * u)
        for (off, n), (Om, Q) in zip(lay.psd, psd):
            sl = slice(off, off + n * (n + 1) // 2)
            Hm = Q.T @ cones.smat(h[sl], n) @ Q
            out[sl] = cones.svec(Q @ (k(Om) * Hm) @ Q.T)
        return out

    def apply_W(self, h):
        return self.apply("W", h)

    def apply_H(self, h):
        return self.apply("H", h)

    def apply_Winv(self, h):
        return self.apply("Winv", h)

    def apply_Hinv(self, h):
        return self.apply("Hinv", h)

    @property
    def residual(self) -> np.ndarray:
        """``z - x``, the s-gradient of the reduced SBAL function."""
        return self.z - self.x


def compute_smoothing(cone: ConeSpec, x: np.ndarray, s: np.ndarray, mu: float, rho: float = 1.0) -> SmoothingState:
    check_parameters(mu, rho)
    x, s = cone.check(x), cone.check(s)
    fr = cones.frame(cone, rho * x - s)
    zframe = Frame(cone, _zmap(fr.orth, rho, mu), _zmap(fr.lam1, rho, 2 * mu), _zmap(fr.lam2, rho, 2 * mu),
                   fr.u, tuple((_zmap(w, rho, mu), Q) for w, Q in fr.psd))
    z = zframe.compose()
    lo = zframe.min_eigenvalue()
    if lo < 1e-14 * np.sqrt(rho * mu):
        warnings.warn(f"min eigenvalue of z is {lo:.3e}, extreme dynamic range", RuntimeWarning, stacklevel=2)
    y = s + rho * (z - x)
    return SmoothingState(cone, x.copy(), s.copy(), float(mu), float(rho), z, y, zframe)


def chks_residual(state: SmoothingState) -> np.ndarray:
    return 2.0 * (state.x - state.z)


def stationarity_residual(state: SmoothingState) -> float:
    """``|mu grad phi(z) + s + rho (z - x)|`` recomputed from scratch."""
    g = cones.barrier_gradient(state.cone, state.z)
    return float(np.linalg.norm(state.mu * g + state.s + state.rho * (state.z - state.x)))


def derivative_checks(state: SmoothingState, rng: np.random.Generator, n_dirs: int = 3) -> dict:
    """Compare closed-form derivatives of z and y against central differences.

    Returns the max relative error per derivative, keyed ``dz_dx``, ``dz_ds``,
    ``dy_dx``, ``dy_ds``, ``dz_dmu``, ``dy_dmu``.
    """
    cone, x, s, mu, rho = state.cone, state.x, state.s, state.mu, state.rho

    def zy(xx, ss, mm):
        st = compute_smoothing(cone, xx, ss, mm, rho)
        return st.z, st.y

    def rel(fd, cf):
        return float(np.linalg.norm(fd - cf) / max(np.linalg.norm(cf), 1e-8 * (1 + np.linalg.norm(state.z))))

    errs = dict.fromkeys(["dz_dx", "dz_ds", "dy_dx", "dy_ds", "dz_dmu", "dy_dmu"], 0.0)
    for _ in range(n_dirs):
        h = rng.standard_normal(cone.dim)
        h /= np.linalg.norm(h)
        Hinv_h = state.apply_Hinv(h)
        HinvW_h = state.apply("HinvW", h)

        step = 1e-6 * (1 + np.linalg.norm(x))
        zp, yp = zy(x + step * h, s, mu)
        zm, ym = zy(x - step * h, s, mu)
        errs["dz_dx"] = max(errs["dz_dx"], rel((zp - zm) / (2 * step), Hinv_h))
        errs["dy_dx"] = max(errs["dy_dx"], rel((yp - ym) / (2 * step), -rho * HinvW_h))

        step = 1e-6 * (1 + np.linalg.norm(s))
        zp, yp = zy(x, s + step * h, mu)
        zm, ym = zy(x, s - step * h, mu)
        errs["dz_ds"] = max(errs["dz_ds"], rel((zp - zm) / (2 * step), -Hinv_h / rho))
        errs["dy_ds"] = max(errs["dy_ds"], rel((yp - ym) / (2 * step), HinvW_h))

    step = 1e-6 * mu
    zp, yp = zy(x, s, mu + step)
    zm, ym = zy(x, s, mu - step)
    Hinv_g = state.apply_Hinv(cones.barrier_gradient(cone, state.z))
    errs["dz_dmu"] = rel((zp - zm) / (2 * step), -Hinv_g / rho)
    errs["dy_dmu"] = rel((yp - ym) / (2 * step), -Hinv_g)
    return errs
