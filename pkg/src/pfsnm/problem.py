"""Problem data in standard primal form ``min <c,x> s.t. Ax = b, x in K``."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .cones import ConeSpec
from .errors import StructuralError

# pivot threshold (relative to the largest diagonal of AA*) below which a row
# is treated as linearly dependent
RANK_TOL = 1e-12


class LinearMap:
    """Sparse ``m x n`` coefficient matrix with a dense copy for Schur assembly.

    Elements use the plain dot product (PSD blocks are svec-scaled), so the
    adjoint is the transpose.
    """

    def __init__(self, mat):
        if sp.issparse(mat):
            self.mat = sp.csr_matrix(mat, dtype=float)
        else:
            arr = np.atleast_2d(np.asarray(mat, dtype=float))
            self.mat = sp.csr_matrix(arr)
        self.mat.sum_duplicates()

    @classmethod
    def from_triplets(cls, rows, cols, vals, shape):
        return cls(sp.coo_matrix((vals, (rows, cols)), shape=shape))

    @property
    def m(self) -> int:
        return self.mat.shape[0]

    @property
    def n(self) -> int:
        return self.mat.shape[1]

    @property
    def shape(self):
        return self.mat.shape

    @cached_property
    def _op(self):
        # dense matvecs are faster at desk scale; keep sparse for big, sparse A
        m, n = self.mat.shape
        if m * n <= 4_000_000 or self.mat.nnz > 0.05 * m * n:
            return self.dense, self.dense.T
        return self.mat, self.mat.T.tocsr()

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self._op[0] @ x

    def adjoint_apply(self, v: np.ndarray) -> np.ndarray:
        return self._op[1] @ v

    @cached_property
    def dense(self) -> np.ndarray:
        return self.mat.toarray()

    @cached_property
    def gram(self) -> np.ndarray:
        """``A A^*`` as a dense symmetric matrix."""
        G = (self.mat @ self.mat.T).toarray()
        return 0.5 * (G + G.T)

    @cached_property
    def gram_factor(self):
        """Cholesky factor of ``A A^*``; failure means A is not surjective."""
        G = self.gram
        if self.m == 0:
            raise StructuralError("A has no rows")
        scale = max(np.max(np.diag(G)), np.finfo(float).tiny)
        try:
            fac = sla.cho_factor(G, lower=True)
        except np.linalg.LinAlgError:
            fac = None
        if fac is None or np.min(np.diag(fac[0])) ** 2 < RANK_TOL * scale:
            dep = dependent_rows(self.dense)
            raise StructuralError(f"A is not surjective; dependent rows {dep[:10]}{'...' if len(dep) > 10 else ''}")
        return fac

    def gram_solve(self, v: np.ndarray) -> np.ndarray:
        return sla.cho_solve(self.gram_factor, v, check_finite=False)

    def __repr__(self):
        return f"LinearMap({self.m}x{self.n}, nnz={self.mat.nnz})"


def dependent_rows(A: np.ndarray, tol: float = 1e-10) -> list[int]:
    """Rows of ``A`` that are linear combinations of the others.

    Uses QR with column pivoting on ``A^T``; rows not selected among the first
    ``rank`` pivots are reported.
    """
    A = np.asarray(A, dtype=float)
    if A.shape[0] == 0:
        return []
    _, R, piv = sla.qr(A.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    r = int(np.sum(d > tol * (d[0] if d.size and d[0] > 0 else 1.0))) if d.size else 0
    return sorted(int(i) for i in piv[r:])


@dataclass
class ProblemData:
    A: LinearMap
    b: np.ndarray
    c: np.ndarray
    cone: ConeSpec
    name: str = "problem"
    objective_offset: float = 0.0
    row_names: list | None = field(default=None, repr=False)
    col_names: list | None = field(default=None, repr=False)
    # free-form provenance, e.g. the map back to original MPS variables
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not isinstance(self.A, LinearMap):
            self.A = LinearMap(self.A)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        m, n = self.A.shape
        if n != self.cone.dim:
            raise StructuralError(f"A has {n} columns, cone dimension is {self.cone.dim}")
        if self.b.shape != (m,):
            raise StructuralError(f"b has length {self.b.size}, A has {m} rows")
        if self.c.shape != (n,):
            raise StructuralError(f"c has length {self.c.size}, cone dimension is {n}")
        if m == 0:
            raise StructuralError("problem has no equality rows")

    @property
    def m(self) -> int:
        return self.A.m

    @property
    def n(self) -> int:
        return self.A.n

    def certify(self) -> "ProblemData":
        """Raise :class:`StructuralError` unless A is surjective."""
        self.A.gram_factor
        return self

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.objective_offset

    def primal_residual(self, x) -> float:
        return float(np.linalg.norm(self.A.apply(x) - self.b))

    def dual_residual(self, s, lam) -> float:
        return float(np.linalg.norm(self.A.adjoint_apply(lam) + s - self.c))

    @cached_property
    def scale(self) -> float:
        return 1.0 + max(np.linalg.norm(self.b), np.linalg.norm(self.c), sp.linalg.norm(self.A.mat))

    @cached_property
    def schur_layout(self):
        """Dense column blocks of A grouped by cone family, reused every iteration."""
        lay = self.cone.layout
        Ad = self.A.dense
        soc_all, starts = [], []
        for h, d in zip(lay.soc_heads, lay.soc_dims):
            starts.append(len(soc_all))
            soc_all.extend(range(h, h + d))
        soc_all = np.asarray(soc_all, dtype=np.intp)
        return {
            "A_orth": Ad[:, lay.orth],
            "soc_all": soc_all,
            "soc_starts": np.asarray(starts, dtype=np.intp),
            "soc_sizes": np.asarray(lay.soc_dims, dtype=np.intp),
            "A_soc": Ad[:, soc_all],
            "A_heads": Ad[:, lay.soc_heads],
            "A_psd": [(off, n, Ad[:, off:off + n * (n + 1) // 2]) for off, n in lay.psd],
        }


def prune_rows(prob: ProblemData, tol: float = 1e-10) -> tuple[ProblemData, list[int]]:
    """Drop linearly dependent equality rows.

    Raises :class:`StructuralError` when a dropped row is inconsistent with the
    kept ones (the system ``Ax = b`` would be infeasible).
    """
    Ad = prob.A.dense
    dep = dependent_rows(Ad, tol)
    if not dep:
        return prob, []
    keep = np.setdiff1d(np.arange(prob.m), dep)
    Ak, bk = Ad[keep], prob.b[keep]
    # consistency: dropped rows must be reproduced by the kept ones
    coef, *_ = np.linalg.lstsq(Ak.T, Ad[dep].T, rcond=None)
    gap = np.abs(coef.T @ bk - prob.b[dep])
    if np.any(gap > 1e-7 * (1 + np.abs(prob.b[dep]))):
        bad = [dep[i] for i in np.flatnonzero(gap > 1e-7 * (1 + np.abs(prob.b[dep])))]
        raise StructuralError(f"dependent rows {bad} are inconsistent with the rest; problem is infeasible")
    rn = [prob.row_names[i] for i in keep] if prob.row_names else None
    out = ProblemData(LinearMap(prob.A.mat[keep]), bk, prob.c, prob.cone, prob.name,
                      prob.objective_offset, rn, prob.col_names, dict(prob.meta, pruned_rows=dep))
    return out, dep
