import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfsnm import cones
from pfsnm.cones import ConeSpec, Orthant, Psd, SecondOrder
from pfsnm.errors import ParameterError
from pfsnm.instances import random_interior
from pfsnm.smoothing import (chks_residual, compute_smoothing, derivative_checks,
                             stationarity_residual)

from conftest import FAMILIES
from helpers import dense, jordan_dense, random_state

R1 = ConeSpec.of(Orthant(1))
GOLD = (np.sqrt(5) - 1) / 2  # 0.6180340


def one_d(x, s, mu=1.0, rho=1.0):
    return compute_smoothing(R1, np.array([x]), np.array([s]), mu, rho)


def test_z_examples_1d():
    assert one_d(0.0, 0.0).z[0] == pytest.approx(1.0, abs=1e-15)
    st_ = one_d(1.0, 2.0)
    assert st_.z[0] == pytest.approx(GOLD, abs=1e-15)
    z = st_.z[0]
    assert -1 / z + 2 + (z - 1) == pytest.approx(0.0, abs=1e-14)
    assert chks_residual(st_)[0] == pytest.approx(0.7639320225, abs=1e-9)
    assert chks_residual(one_d(0.0, 0.0))[0] == pytest.approx(-2.0)


@pytest.mark.parametrize("cone", [ConeSpec.of(Orthant(3)), ConeSpec.of(Psd(3))])
def test_identity_with_mu_e_is_fixed(cone):
    e = cones.identity(cone)
    st_ = compute_smoothing(cone, e, 0.3 * e, 0.3, 1.0)
    assert np.allclose(st_.z, e, atol=1e-14)
    assert np.allclose(chks_residual(st_), 0.0, atol=1e-14)


def test_identity_on_soc_central_pair():
    # the SOC barrier carries a factor 2, so the central pair at x = e is s = 2 mu e
    cone = ConeSpec.of(SecondOrder(4))
    e = cones.identity(cone)
    st_ = compute_smoothing(cone, e, 0.6 * e, 0.3, 1.0)
    assert np.allclose(st_.z, e, atol=1e-14)


def test_parameter_errors():
    with pytest.raises(ParameterError):
        one_d(1.0, 1.0, mu=0.0)
    with pytest.raises(ParameterError):
        one_d(1.0, 1.0, rho=0.5)
    with pytest.raises(ParameterError):
        one_d(1.0, 1.0, mu=float("nan"))


def test_W_H_on_unit_state():
    st_ = one_d(0.0, 0.0)
    assert st_.apply_W(np.ones(1))[0] == pytest.approx(1.0)
    assert st_.apply_H(np.ones(1))[0] == pytest.approx(2.0)


def test_y_is_mu_z_inverse(family, rng):
    st_ = random_state(family, rng)
    want = -st_.mu * cones.barrier_gradient(family, st_.z)
    assert np.allclose(st_.y, want, rtol=1e-10, atol=1e-10 * (1 + np.linalg.norm(st_.y)))


def test_operators_against_dense_hessian(family, rng):
    st_ = random_state(family, rng)
    c = st_.mu / st_.rho
    Hphi = dense(family, lambda h: cones.hessian_apply(family, st_.z, h))
    W = dense(family, st_.apply_W)
    H = dense(family, st_.apply_H)
    tol = dict(rtol=1e-10, atol=1e-10 * np.abs(W).max())
    assert np.allclose(W, c * Hphi, **tol)
    assert np.allclose(H, np.eye(family.dim) + W, **tol)
    assert np.allclose(dense(family, st_.apply_Winv), np.linalg.inv(W), rtol=1e-8,
                       atol=1e-8 * np.abs(np.linalg.inv(W)).max())
    assert np.allclose(dense(family, st_.apply_Hinv), np.linalg.inv(H), rtol=1e-10, atol=1e-12)
    # symmetric, commuting, W > 0
    assert np.allclose(W, W.T, **tol)
    assert np.allclose(W @ H, H @ W, **tol)
    assert np.linalg.eigvalsh((W + W.T) / 2).min() > 0


def test_Hinv_roundtrip(family, rng):
    st_ = random_state(family, rng)
    h = rng.standard_normal(family.dim)
    assert np.allclose(st_.apply_Hinv(st_.apply_H(h)), h, atol=1e-12)
    assert np.allclose(st_.apply_Winv(st_.apply_W(h)), h, rtol=1e-9, atol=1e-9)


# -- central-path equivalence --------------------------------------------------

def test_central_pair_gives_z_equal_x(family, rng):
    x = random_interior(family, rng, 0.4)
    mu = 0.37
    s = -mu * cones.barrier_gradient(family, x)
    for rho in (1.0, 5.0):
        st_ = compute_smoothing(family, x, s, mu, rho)
        assert np.linalg.norm(st_.z - x) <= 1e-9 * (1 + np.linalg.norm(x))


def test_z_equal_x_implies_complementarity(family, rng):
    # build s from a chosen interior z = x, then check x o s = mu * scale * e
    x = random_interior(family, rng, 0.4)
    mu = 0.8
    s = -mu * cones.barrier_gradient(family, x)
    st_ = compute_smoothing(family, x, s, mu, 1.0)
    assert np.allclose(st_.z, x, atol=1e-10)
    xs = jordan_dense(family, x) @ s
    e = cones.identity(family)
    scale = np.concatenate([np.full(b.dim, 2.0 if isinstance(b, SecondOrder) else 1.0) for b in family.blocks])
    assert np.allclose(xs, mu * scale * e, atol=1e-9)


# -- derivatives -----------------------------------------------------------------

def test_derivatives_1d(rng):
    st_ = one_d(0.3, -0.7, mu=0.5, rho=2.0)
    assert max(derivative_checks(st_, rng).values()) <= 1e-5


def test_derivatives_all_families(family, rng):
    st_ = random_state(family, rng)
    errs = derivative_checks(st_, rng)
    assert max(errs.values()) <= 1e-5, errs


def test_derivative_consistency_on_central_path(family, rng):
    # moving along (h, -rho h) changes z by 2 H^-1 h to first order
    x = random_interior(family, rng, 0.4)
    st_ = compute_smoothing(family, x, -0.5 * cones.barrier_gradient(family, x), 0.5, 1.0)
    h = rng.standard_normal(family.dim)
    t = 1e-6
    zp = compute_smoothing(family, x + t * h, st_.s - t * st_.rho * h, 0.5, 1.0).z
    zm = compute_smoothing(family, x - t * h, st_.s + t * st_.rho * h, 0.5, 1.0).z
    assert np.allclose((zp - zm) / (2 * t), 2 * st_.apply_Hinv(h), atol=1e-7)


# -- properties ---------------------------------------------------------------------

@given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(FAMILIES)),
       st.floats(-3, 3), st.sampled_from([1.0, 3.0, 100.0]), st.floats(-2, 2))
def test_stationarity_and_interiority(seed, name, log_mu, rho, log_scale):
    cone = FAMILIES[name]
    rng = np.random.default_rng(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        st_ = random_state(cone, rng, mu=10.0**log_mu, rho=rho, scale=10.0**log_scale)
    assert cones.in_interior(cone, st_.z)
    bound = 1e-10 * (1 + np.linalg.norm(st_.s) + rho * np.linalg.norm(st_.x))
    assert stationarity_residual(st_) <= bound
    assert np.allclose(st_.y, st_.s + rho * (st_.z - st_.x), rtol=0, atol=0)


@given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(FAMILIES)))
def test_W_symmetric_positive(seed, name):
    cone = FAMILIES[name]
    rng = np.random.default_rng(seed)
    st_ = random_state(cone, rng)
    h1, h2 = rng.standard_normal((2, cone.dim))
    W1, W2 = st_.apply_W(h1), st_.apply_W(h2)
    assert h2 @ W1 == pytest.approx(h1 @ W2, rel=1e-10, abs=1e-10)
    assert h1 @ W1 > 0
    assert np.linalg.norm(st_.apply_W(st_.apply_H(h1)) - st_.apply_H(W1)) <= 1e-12 * (1 + np.linalg.norm(W1)) ** 2


def test_warns_on_extreme_dynamic_range():
    with pytest.warns(RuntimeWarning, match="dynamic range"):
        one_d(0.0, 1e12, mu=1e-10, rho=1.0)
