"""Shared oracles and random draws for the test suite."""

import numpy as np

from pfsnm import cones
from pfsnm.instances import random_element, random_interior, random_problem
from pfsnm.smoothing import compute_smoothing


def random_state(cone, rng, mu=None, rho=None, scale=1.0):
    x = scale * random_element(cone, rng)
    s = scale * random_element(cone, rng)
    mu = float(np.exp(rng.uniform(np.log(1e-2), np.log(10.0)))) if mu is None else mu
    rho = float(rng.choice([1.0, 2.0, 10.0])) if rho is None else rho
    return compute_smoothing(cone, x, s, mu, rho)


def feasible_state(cone, rng, m=3, mu=0.7, rho=1.0, spread=0.5):
    """Problem plus a primal-dual feasible iterate (not necessarily central)."""
    prob, gen = random_problem(cone, m, rng, spread=spread)
    x = gen["x"] + 0.3 * _kernel_noise(prob, rng)
    lam = gen["lam"] + 0.2 * rng.standard_normal(prob.m)
    s = prob.c - prob.A.adjoint_apply(lam)
    return prob, compute_smoothing(cone, x, s, mu, rho), lam


def central_state(cone, rng, m=3, mu=0.7, rho=1.0):
    """Problem and a point on the central path: ``s = -mu grad phi(x)`` and dual feasible."""
    x = random_interior(cone, rng, 0.4)
    s = -mu * cones.barrier_gradient(cone, x)
    A = rng.standard_normal((m, cone.dim))
    lam = rng.standard_normal(m)
    from pfsnm.problem import ProblemData
    prob = ProblemData(A, A @ x, A.T @ lam + s, cone)
    return prob, compute_smoothing(cone, x, s, mu, rho), lam


def _kernel_noise(prob, rng):
    v = rng.standard_normal(prob.n)
    return v - prob.A.adjoint_apply(prob.A.gram_solve(prob.A.apply(v)))


def dense(cone, fn):
    return cones.dense_operator(cone, fn)


def jordan_dense(cone, x):
    """Matrix of ``h -> x o h`` (the Jordan-product operator), built from columns."""
    return cones.dense_operator(cone, lambda h: cones.jordan_product(cone, x, h))


def cvx_optimum(prob):
    """Optimal value from cvxpy/Clarabel, used as an independent oracle."""
    import cvxpy as cp

    from pfsnm.cones import Orthant, Psd, SecondOrder
    x = cp.Variable(prob.n)
    cons = [prob.A.dense @ x == prob.b]
    for b, sl in zip(prob.cone.blocks, prob.cone.block_slices()):
        xb = x[sl]
        if isinstance(b, Orthant):
            cons.append(xb >= 0)
        elif isinstance(b, SecondOrder):
            cons.append(cp.SOC(xb[0], xb[1:]))
        else:
            # svec -> symmetric matrix, column-major lower triangle
            n = b.n
            rows, cols = np.tril_indices(n)
            order = np.lexsort((rows, cols))
            rows, cols = rows[order], cols[order]
            X = cp.Variable((n, n), symmetric=True)
            w = np.where(rows == cols, 1.0, np.sqrt(2.0))
            cons += [X >> 0] + [xb[k] == w[k] * X[rows[k], cols[k]] for k in range(rows.size)]
    p = cp.Problem(cp.Minimize(prob.c @ x), cons)
    p.solve(solver=cp.CLARABEL)
    return float(p.value) + prob.objective_offset


# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict = {}
