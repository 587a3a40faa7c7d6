"""Euclidean Jordan algebra kernel for products of R^n_+, second-order and PSD cones.

Elements are flat float arrays. A :class:`ConeSpec` says how the array is cut
into blocks:

* ``Orthant(n)``: ``n`` coordinates, Jordan product is the elementwise product.
* ``SecondOrder(d)``: ``(x0, xbar)`` with ``xbar`` of length ``d - 1``,
  Jordan product ``(x.y, x0*ybar + y0*xbar)``.
* ``Psd(n)``: a symmetric ``n x n`` matrix stored as ``svec`` (column-major
  lower triangle, off-diagonals scaled by sqrt(2)), so that the plain dot
  product of two payloads equals the trace inner product.

The barrier is ``phi(x) = -ln det(x)`` on every block, with ``det`` the product
of the Jordan eigenvalues. For the second-order cone that is
``-ln(x0^2 - |xbar|^2)`` (rank 2). Because SOC payloads use the plain dot
product (half the Jordan trace form), the gradient on those blocks is
``-2 x^{-1}``; on orthant and PSD blocks it is ``-x^{-1}``. See
:func:`barrier_scale`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NumericalError, StructuralError

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class Orthant:
    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise StructuralError(f"Orthant dimension must be >= 1, got {self.n}")

    @property
    def dim(self) -> int:
        return self.n

    @property
    def rank(self) -> int:
        return self.n


@dataclass(frozen=True)
class SecondOrder:
    """Second-order cone; ``d`` is the total dimension including the leading scalar."""

    d: int

    def __post_init__(self):
        if int(self.d) < 2:
            raise StructuralError(f"SecondOrder dimension must be >= 2, got {self.d}")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def rank(self) -> int:
        return 2


@dataclass(frozen=True)
class Psd:
    """PSD cone of ``n x n`` matrices, ``n(n+1)/2`` coordinates."""

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise StructuralError(f"Psd order must be >= 1, got {self.n}")

    @property
    def dim(self) -> int:
        return self.n * (self.n + 1) // 2

    @property
    def rank(self) -> int:
        return self.n


Block = Orthant | SecondOrder | Psd


@dataclass(frozen=True)
class _Layout:
    orth: np.ndarray
    soc_heads: np.ndarray
    soc_tail: np.ndarray
    soc_tail_block: np.ndarray
    soc_tail_starts: np.ndarray
    soc_dims: np.ndarray
    psd: tuple  # ((offset, n), ...)


@dataclass(frozen=True)
class ConeSpec:
    blocks: tuple = field(default=())

    def __post_init__(self):
        blocks = tuple(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise StructuralError("a cone needs at least one block")
        for b in blocks:
            if not isinstance(b, (Orthant, SecondOrder, Psd)):
                raise StructuralError(f"unknown cone block {b!r}")

    @classmethod
    def of(cls, *blocks: Block) -> "ConeSpec":
        return cls(tuple(blocks))

    @cached_property
    def dim(self) -> int:
        return sum(b.dim for b in self.blocks)

    @cached_property
    def rank(self) -> int:
        return sum(b.rank for b in self.blocks)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([b.dim for b in self.blocks])]).astype(int)

    def block_slices(self) -> list[slice]:
        o = self.offsets
        return [slice(o[i], o[i + 1]) for i in range(len(self.blocks))]

    @cached_property
    def layout(self) -> _Layout:
        orth, heads, tail, tail_block, tail_starts, dims, psd = [], [], [], [], [], [], []
        for b, sl in zip(self.blocks, self.block_slices()):
            if isinstance(b, Orthant):
                orth.extend(range(sl.start, sl.stop))
            elif isinstance(b, SecondOrder):
                tail_starts.append(len(tail))
                tail_block.extend([len(heads)] * (b.d - 1))
                heads.append(sl.start)
                tail.extend(range(sl.start + 1, sl.stop))
                dims.append(b.d)
            else:
                psd.append((sl.start, b.n))
        as_int = lambda v: np.asarray(v, dtype=np.intp)
        return _Layout(as_int(orth), as_int(heads), as_int(tail), as_int(tail_block),
                       as_int(tail_starts), as_int(dims), tuple(psd))

    @cached_property
    def barrier_scale(self) -> np.ndarray:
        """2 on SOC coordinates, 1 elsewhere: ``grad phi(x) = -barrier_scale * x^{-1}``."""
        w = np.ones(self.dim)
        w[self.layout.soc_heads] = 2.0
        w[self.layout.soc_tail] = 2.0
        return w

    @property
    def has_soc(self) -> bool:
        return self.layout.soc_heads.size > 0

    def check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise StructuralError(f"element has shape {x.shape}, cone needs ({self.dim},)")
        return x

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        """Per-block payloads; PSD blocks come back as symmetric matrices."""
        x = self.check(x)
        out = []
        for b, sl in zip(self.blocks, self.block_slices()):
            out.append(smat(x[sl], b.n) if isinstance(b, Psd) else x[sl].copy())
        return out

    def join(self, payloads: Sequence) -> np.ndarray:
        if len(payloads) != len(self.blocks):
            raise StructuralError("payload count does not match block count")
        parts = []
        for b, p in zip(self.blocks, payloads):
            p = np.asarray(p, dtype=float)
            if isinstance(b, Psd):
                if p.shape != (b.n, b.n):
                    raise StructuralError(f"Psd({b.n}) payload has shape {p.shape}")
                asym = np.abs(p - p.T).max(initial=0.0)
                if asym > 1e-14 * max(1.0, np.abs(p).max(initial=0.0)):
                    raise StructuralError("Psd payload is not symmetric")
                parts.append(svec(p))
            else:
                if p.shape != (b.dim,):
                    raise StructuralError(f"{b} payload has shape {p.shape}")
                parts.append(p)
        return np.concatenate(parts)


# ---------------------------------------------------------------------------
# svec / smat


@lru_cache(maxsize=None)
def _svec_index(n: int):
    r, c = np.triu_indices(n)
    rows, cols = c, r  # column-major lower triangle
    scale = np.where(rows == cols, 1.0, SQRT2)
    return rows, cols, scale


def svec(X: np.ndarray) -> np.ndarray:
    """Scaled lower-triangle vectorization; works on stacks ``(..., n, n)``."""
    n = X.shape[-1]
    rows, cols, scale = _svec_index(n)
    return X[..., rows, cols] * scale


def smat(v: np.ndarray, n: int | None = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if n is None:
        n = int(round((np.sqrt(8 * v.shape[-1] + 1) - 1) / 2))
    rows, cols, scale = _svec_index(n)
    X = np.zeros(v.shape[:-1] + (n, n))
    vals = v / scale
    X[..., rows, cols] = vals
    X[..., cols, rows] = vals
    return X


# ---------------------------------------------------------------------------
# basic algebra


def rank(cone: ConeSpec) -> int:
    return cone.rank


def identity(cone: ConeSpec) -> np.ndarray:
    e = np.zeros(cone.dim)
    lay = cone.layout
    e[lay.orth] = 1.0
    e[lay.soc_heads] = 1.0
    for off, n in lay.psd:
        e[off:off + n * (n + 1) // 2] = svec(np.eye(n))
    return e


def inner(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.dot(x, y))


def norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def _soc_sum(cone: ConeSpec, v_tail: np.ndarray) -> np.ndarray:
    """Per-block sums of a vector living on the SOC tail coordinates."""
    lay = cone.layout
    if lay.soc_tail.size == 0:
        return np.zeros(0)
    return np.add.reduceat(v_tail, lay.soc_tail_starts)


def soc_parts(cone: ConeSpec, x: np.ndarray):
    """Heads, tails and tail norms of every SOC block."""
    lay = cone.layout
    x0 = x[lay.soc_heads]
    xt = x[lay.soc_tail]
    return x0, xt, np.sqrt(_soc_sum(cone, xt * xt))


def jordan_product(cone: ConeSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x, y = cone.check(x), cone.check(y)
    out = np.empty(cone.dim)
    lay = cone.layout
    out[lay.orth] = x[lay.orth] * y[lay.orth]
    if lay.soc_heads.size:
        x0, y0 = x[lay.soc_heads], y[lay.soc_heads]
        xt, yt = x[lay.soc_tail], y[lay.soc_tail]
        out[lay.soc_heads] = x0 * y0 + _soc_sum(cone, xt * yt)
        tb = lay.soc_tail_block
        out[lay.soc_tail] = x0[tb] * yt + y0[tb] * xt
    for off, n in lay.psd:
        sl = slice(off, off + n * (n + 1) // 2)
        X, Y = smat(x[sl], n), smat(y[sl], n)
        P = X @ Y
        out[sl] = svec(0.5 * (P + P.T))
    return out


# ---------------------------------------------------------------------------
# spectral frames


@dataclass(frozen=True)
class Frame:
    """Jordan frame of an element together with its eigenvalues.

    SOC blocks keep ``(lam1, lam2)`` and the unit tail direction ``u`` (with
    ``u = e_1`` when the tail vanishes); PSD blocks keep ``(w, Q)`` with ``w``
    descending.
    """

    cone: ConeSpec
    orth: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    u: np.ndarray
    psd: tuple

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Frame":
        """Apply a scalar function to every eigenvalue, keeping the frame."""
        return Frame(self.cone, fn(self.orth), fn(self.lam1), fn(self.lam2), self.u,
                     tuple((fn(w), Q) for w, Q in self.psd))

    def compose(self) -> np.ndarray:
        cone = self.cone
        lay = cone.layout
        out = np.empty(cone.dim)
        out[lay.orth] = self.orth
        if lay.soc_heads.size:
            out[lay.soc_heads] = 0.5 * (self.lam1 + self.lam2)
            half_gap = 0.5 * (self.lam1 - self.lam2)
            out[lay.soc_tail] = half_gap[lay.soc_tail_block] * self.u
        for (off, n), (w, Q) in zip(lay.psd, self.psd):
            out[off:off + n * (n + 1) // 2] = svec((Q * w) @ Q.T)
        return out

    def eigenvalues(self) -> np.ndarray:
        parts = [self.orth, self.lam1, self.lam2] + [w for w, _ in self.psd]
        return np.concatenate(parts)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues().min())


def frame(cone: ConeSpec, x: np.ndarray) -> Frame:
    x = cone.check(x)
    lay = cone.layout
    x0, xt, nb = soc_parts(cone, x)
    u = np.zeros(lay.soc_tail.size)
    if lay.soc_heads.size:
        safe = np.where(nb > 0, nb, 1.0)
        u = xt / safe[lay.soc_tail_block]
        degenerate = np.flatnonzero(nb == 0)
        if degenerate.size:
            u[lay.soc_tail_starts[degenerate]] = 1.0
    psd = []
    for off, n in lay.psd:
        X = smat(x[off:off + n * (n + 1) // 2], n)
        try:
            w, Q = np.linalg.eigh(X)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"symmetric eigensolver failed on Psd({n}) block") from exc
        psd.append((w[::-1].copy(), Q[:, ::-1].copy()))
    return Frame(cone, x[lay.orth].copy(), x0 + nb, x0 - nb, u, tuple(psd))


@dataclass(frozen=True)
class SpectralDecomp:
    eigenvalues: np.ndarray
    idempotents: list  # block-local payload vectors (svec for PSD)


def spectral_decompose(cone: ConeSpec, x: np.ndarray) -> list[SpectralDecomp]:
    """Per-block eigenvalues (descending) and primitive idempotents."""
    fr = frame(cone, x)
    lay = cone.layout
    out = []
    i_orth = i_soc = i_psd = 0
    tail_pos = 0
    for b in cone.blocks:
        if isinstance(b, Orthant):
            vals = fr.orth[i_orth:i_orth + b.n]
            order = np.argsort(-vals, kind="stable")
            eye = np.eye(b.n)
            out.append(SpectralDecomp(vals[order], [eye[k] for k in order]))
            i_orth += b.n
        elif isinstance(b, SecondOrder):
            u = fr.u[tail_pos:tail_pos + b.d - 1]
            v1 = 0.5 * np.concatenate([[1.0], u])
            v2 = 0.5 * np.concatenate([[1.0], -u])
            out.append(SpectralDecomp(np.array([fr.lam1[i_soc], fr.lam2[i_soc]]), [v1, v2]))
            i_soc += 1
            tail_pos += b.d - 1
        else:
            w, Q = fr.psd[i_psd]
            out.append(SpectralDecomp(w.copy(), [svec(np.outer(Q[:, k], Q[:, k])) for k in range(b.n)]))
            i_psd += 1
    assert tail_pos == lay.soc_tail.size
    return out


def eigenvalues(cone: ConeSpec, x: np.ndarray) -> np.ndarray:
    return frame(cone, x).eigenvalues()


# ---------------------------------------------------------------------------
# functional calculus, determinant, barrier

_DOMAIN_TOL = 1e-12


def _sqrt(lam):
    if lam.size and lam.min() < -_DOMAIN_TOL:
        raise DomainError(f"sqrt of negative eigenvalue {lam.min():.3e}")
    return np.sqrt(np.maximum(lam, 0.0))


def _positive(name):
    def check(lam):
        if lam.size and lam.min() <= 0:
            raise DomainError(f"{name} needs positive eigenvalues, min is {lam.min():.3e}")
    return check


def _inv(lam):
    # Jordan inverse exists whenever no eigenvalue vanishes
    if lam.size and np.abs(lam).min() == 0:
        raise DomainError("inv of a singular element (zero eigenvalue)")
    return 1.0 / lam


def _log(lam):
    _positive("log")(lam)
    return np.log(lam)


SCALAR_FUNCTIONS = {"sqrt": _sqrt, "inv": _inv, "log": _log}


def scalar_calculus(g: str, cone: ConeSpec, x: np.ndarray) -> np.ndarray:
    """``g(x) = sum_i g(lambda_i) v_i`` for ``g`` in ``{"sqrt", "inv", "log"}``."""
    try:
        fn = SCALAR_FUNCTIONS[g]
    except KeyError:
        raise ValueError(f"unknown scalar function {g!r}") from None
    return frame(cone, x).map(fn).compose()


def inverse(cone: ConeSpec, x: np.ndarray) -> np.ndarray:
    return scalar_calculus("inv", cone, x)


def det(cone: ConeSpec, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Per-block determinants and their product."""
    fr = frame(cone, x)
    per_block = []
    i_orth = i_soc = i_psd = 0
    for b in cone.blocks:
        if isinstance(b, Orthant):
            per_block.append(np.prod(fr.orth[i_orth:i_orth + b.n]))
            i_orth += b.n
        elif isinstance(b, SecondOrder):
            per_block.append(fr.lam1[i_soc] * fr.lam2[i_soc])
            i_soc += 1
        else:
            per_block.append(np.prod(fr.psd[i_psd][0]))
            i_psd += 1
    per_block = np.asarray(per_block, dtype=float)
    return per_block, float(np.prod(per_block))


def in_interior(cone: ConeSpec, x: np.ndarray) -> bool:
    """Strict test: every eigenvalue > 0."""
    lam = eigenvalues(cone, x)
    return bool(lam.size == 0 or lam.min() > 0)


def _require_interior(cone, x, what):
    if not in_interior(cone, x):
        raise DomainError(f"{what} needs a point in the cone interior")


def barrier_value(cone: ConeSpec, x: np.ndarray) -> float:
    lam = eigenvalues(cone, x)
    if lam.min() <= 0:
        raise DomainError("barrier is +inf outside the cone interior")
    return float(-np.sum(np.log(lam)))


def barrier_gradient(cone: ConeSpec, x: np.ndarray) -> np.ndarray:
    _require_interior(cone, x, "barrier_gradient")
    return -cone.barrier_scale * inverse(cone, x)


def _soc_J(cone, h):
    """Apply J = diag(1, -1, ..., -1) blockwise on SOC coordinates."""
    lay = cone.layout
    out = np.zeros_like(h)
    out[lay.soc_heads] = h[lay.soc_heads]
    out[lay.soc_tail] = -h[lay.soc_tail]
    return out


def hessian_apply(cone: ConeSpec, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``D^2 phi(z)[h]`` from the closed forms of each cone family."""
    z, h = cone.check(z), cone.check(h)
    _require_interior(cone, z, "hessian_apply")
    lay = cone.layout
    out = np.empty(cone.dim)
    out[lay.orth] = h[lay.orth] / z[lay.orth] ** 2
    if lay.soc_heads.size:
        z0, zt, nb = soc_parts(cone, z)
        d = (z0 - nb) * (z0 + nb)
        h0, ht = h[lay.soc_heads], h[lay.soc_tail]
        Jz_h = z0 * h0 - _soc_sum(cone, zt * ht)
        coef = 4.0 * Jz_h / d**2
        tb = lay.soc_tail_block
        out[lay.soc_heads] = coef * z0 - (2.0 / d) * h0
        out[lay.soc_tail] = -coef[tb] * zt + (2.0 / d)[tb] * ht
    for off, n in lay.psd:
        sl = slice(off, off + n * (n + 1) // 2)
        Zi = np.linalg.inv(smat(z[sl], n))
        out[sl] = svec(Zi @ smat(h[sl], n) @ Zi)
    return out


def hessian_inv_apply(cone: ConeSpec, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``(D^2 phi(z))^{-1}[h]``; for SOC blocks ``z <z, h> - (det z / 2) J h``."""
    z, h = cone.check(z), cone.check(h)
    _require_interior(cone, z, "hessian_inv_apply")
    lay = cone.layout
    out = np.empty(cone.dim)
    out[lay.orth] = h[lay.orth] * z[lay.orth] ** 2
    if lay.soc_heads.size:
        z0, zt, nb = soc_parts(cone, z)
        d = (z0 - nb) * (z0 + nb)
        h0, ht = h[lay.soc_heads], h[lay.soc_tail]
        zh = z0 * h0 + _soc_sum(cone, zt * ht)
        tb = lay.soc_tail_block
        out[lay.soc_heads] = zh * z0 - 0.5 * d * h0
        out[lay.soc_tail] = zh[tb] * zt + (0.5 * d)[tb] * ht
    for off, n in lay.psd:
        sl = slice(off, off + n * (n + 1) // 2)
        Z = smat(z[sl], n)
        out[sl] = svec(Z @ smat(h[sl], n) @ Z)
    return out


def dense_operator(cone: ConeSpec, apply: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Materialize a linear operator on the ambient space column by column."""
    eye = np.eye(cone.dim)
    return np.column_stack([apply(eye[:, k]) for k in range(cone.dim)])
