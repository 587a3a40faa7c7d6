"""Random cone elements and strictly feasible random problems."""

from __future__ import annotations

import numpy as np

from . import cones
from .cones import ConeSpec, Orthant, Psd, SecondOrder
from .problem import ProblemData


def random_interior(cone: ConeSpec, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    """An interior point with eigenvalues ``exp(spread * N(0,1))``."""
    x = np.empty(cone.dim)
    for b, sl in zip(cone.blocks, cone.block_slices()):
        if isinstance(b, Orthant):
            x[sl] = np.exp(spread * rng.standard_normal(b.n))
        elif isinstance(b, SecondOrder):
            lam = np.exp(spread * rng.standard_normal(2))
            lam.sort()
            u = rng.standard_normal(b.d - 1)
            u /= np.linalg.norm(u)
            x[sl.start] = lam.sum() / 2
            x[sl.start + 1:sl.stop] = (lam[1] - lam[0]) / 2 * u
        else:
            Q, _ = np.linalg.qr(rng.standard_normal((b.n, b.n)))
            w = np.exp(spread * rng.standard_normal(b.n))
            x[sl] = cones.svec((Q * w) @ Q.T)
    return x


def random_element(cone: ConeSpec, rng: np.random.Generator) -> np.ndarray:
    """Gaussian element, PSD blocks symmetric by construction."""
    return rng.standard_normal(cone.dim)


def random_problem(cone: ConeSpec, m: int, rng: np.random.Generator, name: str = "random",
                   spread: float = 0.5) -> tuple[ProblemData, dict]:
    """Strictly primal-dual feasible instance built around interior ``x*``, ``s*``.

    Returns the problem and the generating points.
    """
    A = rng.standard_normal((m, cone.dim))
    xs = random_interior(cone, rng, spread)
    ss = random_interior(cone, rng, spread)
    lam = rng.standard_normal(m)
    prob = ProblemData(A, A @ xs, A.T @ lam + ss, cone, name)
    return prob, {"x": xs, "s": ss, "lam": lam}


def random_lp(n: int, rng: np.random.Generator, m: int | None = None) -> ProblemData:
    m = m if m is not None else max(1, n // 2)
    return random_problem(ConeSpec.of(Orthant(n)), m, rng, f"lp{n}")[0]


def random_socp(nu: int, rng: np.random.Generator, block_dim: int = 4, m: int | None = None) -> ProblemData:
    """SOCP with ``nu // 2`` second-order blocks (rank ``2 * (nu // 2)``)."""
    nb = max(1, nu // 2)
    cone = ConeSpec(tuple(SecondOrder(block_dim) for _ in range(nb)))
    m = m if m is not None else max(1, cone.dim // 3)
    return random_problem(cone, m, rng, f"socp{2 * nb}")[0]


def random_sdp(n: int, rng: np.random.Generator, m: int | None = None) -> ProblemData:
    cone = ConeSpec.of(Psd(n))
    m = m if m is not None else max(1, cone.dim // 3)
    return random_problem(cone, m, rng, f"sdp{n}")[0]
