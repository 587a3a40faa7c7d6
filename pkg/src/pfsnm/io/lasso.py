"""Square-root Lasso ``min ||Dy - b|| + rho ||y||_1`` as an SOCP.

Variables are ordered ``(t, d, y+, y-)`` with ``(t, d)`` in a second-order
cone of dimension ``len(b) + 1`` and ``y+, y-`` nonnegative. The equality
rows read ``D y+ - D y- - d = b``, so at an optimum ``t = ||Dy - b||``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from ..cones import ConeSpec, Orthant, SecondOrder
from ..errors import StructuralError
from ..problem import LinearMap, ProblemData

log = logging.getLogger(__name__)


@dataclass
class LassoSpec:
    D: object  # dense array or scipy sparse, shape (p, n)
    b: np.ndarray
    rho: float | None = None  # defaults to ||D^T b||_inf
    name: str = "sqrt_lasso"

    def __post_init__(self):
        if not sp.issparse(self.D) and np.ndim(self.D) != 2:
            raise StructuralError("D must be a 2-d matrix")
        self.D = sp.csr_matrix(self.D, dtype=float)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.D.shape[0] != self.b.size:
            raise StructuralError(f"D has {self.D.shape[0]} rows, b has length {self.b.size}")
        if self.b.size == 0:
            raise StructuralError("b must be nonempty")

    @property
    def weight(self) -> float:
        if self.rho is not None:
            return float(self.rho)
        return default_weight(self.D, self.b)


def default_weight(D, b) -> float:
    """``||D^T b||_inf`` (0 when D has no columns)."""
    g = sp.csr_matrix(D).T @ np.asarray(b, dtype=float)
    return float(np.max(np.abs(g))) if g.size else 0.0


def build_sqrt_lasso(spec: LassoSpec) -> ProblemData:
    D, b = spec.D, spec.b
    p, n = D.shape
    if n and D.nnz == 0:
        log.warning("build_sqrt_lasso: D is zero; the problem is degenerate (y only pays the l1 penalty)")
    rho = spec.weight
    A = sp.hstack([sp.csr_matrix((p, 1)), -sp.identity(p, format="csr"), D, -D], format="csr")
    c = np.concatenate([[1.0], np.zeros(p), np.full(2 * n, rho)])
    blocks = [SecondOrder(p + 1)] + ([Orthant(2 * n)] if n else [])
    meta = {"lasso": {"p": p, "n": n, "rho": rho}}
    return ProblemData(LinearMap(A), b.copy(), c, ConeSpec(tuple(blocks)), spec.name, 0.0, meta=meta)


def recover_y(prob: ProblemData, x: np.ndarray) -> np.ndarray:
    info = prob.meta["lasso"]
    p, n = info["p"], info["n"]
    return x[1 + p:1 + p + n] - x[1 + p + n:1 + p + 2 * n]


def lasso_objective(D, b, rho: float, y: np.ndarray) -> float:
    return float(np.linalg.norm(sp.csr_matrix(D) @ y - b) + rho * np.abs(y).sum())


def subgradient_gap(D, b, rho: float, y: np.ndarray, tol: float = 1e-6) -> float:
    """Distance (inf-norm) from 0 to the subdifferential of the objective at ``y``.

    Coordinates with ``|y_i| <= tol`` use the interval ``[-rho, rho]``. When
    ``||Dy - b|| <= tol`` the norm term contributes ``D^T w`` for any ``||w|| <= 1``
    and the best ``w`` is found by a small constrained fit.
    """
    D = sp.csr_matrix(D)
    r = D @ y - b
    nr = float(np.linalg.norm(r))
    zero = np.abs(y) <= tol
    if D.shape[1] == 0:
        return 0.0

    def gap(g):
        return np.where(zero, np.maximum(np.abs(g) - rho, 0.0), np.abs(g + rho * np.sign(y)))

    if nr > tol:
        return float(np.max(gap(D.T @ (r / nr))))
    Dt = D.T.toarray()
    res = minimize(lambda w: float(np.sum(gap(Dt @ w) ** 2)), np.zeros(D.shape[0]), method="SLSQP",
                   constraints=[{"type": "ineq", "fun": lambda w: 1.0 - w @ w}])
    return float(np.max(gap(Dt @ res.x)))


def zero_is_optimal(D, b, rho: float) -> bool:
    """``y = 0`` is optimal iff ``||D^T b||_inf <= rho ||b||``."""
    return default_weight(D, b) <= rho * float(np.linalg.norm(b))


def synthetic_rhs(D, seed: int = 0, norm: float = 0.5) -> np.ndarray:
    """``b = D u + noise`` with a sparse ``u``, rescaled to ``||b|| = norm``.

    With the default weight ``||D^T b||_inf`` the point ``y = 0`` is optimal as
    soon as ``||b|| >= 1``; a norm below 1 keeps the instances nontrivial.
    """
    D = sp.csr_matrix(D)
    p, n = D.shape
    rng = np.random.default_rng(seed)
    u = np.zeros(n)
    k = max(1, n // 3) if n else 0
    u[rng.permutation(n)[:k]] = rng.standard_normal(k)
    b = D @ u + 0.1 * rng.standard_normal(p)
    nb = np.linalg.norm(b)
    return b * (norm / nb) if nb > 0 else np.full(p, norm / np.sqrt(p))
