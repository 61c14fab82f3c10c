import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfdual import (
    DomainWarning,
    InvalidArgument,
    Potential,
    boundary_residual,
    boundary_value,
    make_boundary,
    selfduality_residual,
)
from selfdual.boundary import KINDS, alpha_from_lambda, lambda_from_alpha

RNG = np.random.default_rng(0)
X0 = RNG.normal(size=4)


def satisfying(kind, bl, uT):
    if kind == "initial_value":
        return X0.copy()
    if kind == "periodic":
        return uT.copy()
    if kind == "anti_periodic":
        return -uT
    return bl.alpha * uT


def kinds():
    return {
        "initial_value": make_boundary("initial_value", x0=X0),
        "periodic": make_boundary("periodic"),
        "anti_periodic": make_boundary("anti_periodic"),
        "alpha_periodic": make_boundary("alpha_periodic", lam=3.0),
    }


def test_catalog_complete():
    assert set(kinds()) == set(KINDS)


@pytest.mark.parametrize("lam,alpha", [(1 / 3, -0.5), (1.0, 0.0), (3.0, 0.5)])
def test_alpha_map_exact(lam, alpha):
    assert alpha_from_lambda(lam) == alpha
    assert make_boundary("alpha_periodic", lam=lam).alpha == alpha


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.99, 0.99))
def test_alpha_lambda_roundtrip(alpha):
    lam = lambda_from_alpha(alpha)
    assert lam > 0
    assert alpha_from_lambda(lam) == pytest.approx(alpha, abs=1e-14)
    assert alpha_from_lambda(lam) == pytest.approx((lam - 1) / (lam + 1), abs=1e-15)


def test_invalid_parameters():
    with pytest.raises(InvalidArgument):
        make_boundary("alpha_periodic", lam=0.0)
    with pytest.raises(InvalidArgument):
        make_boundary("alpha_periodic", lam=-1.0)
    with pytest.raises(InvalidArgument):
        make_boundary("alpha_periodic", alpha=1.0)
    with pytest.raises(InvalidArgument):
        make_boundary("alpha_periodic")
    with pytest.raises(InvalidArgument):
        make_boundary("initial_value")
    with pytest.raises(InvalidArgument):
        make_boundary("dirichlet")


def test_alpha_input_converts_to_lambda():
    assert make_boundary("alpha_periodic", alpha=0.5).lam == pytest.approx(3.0)


# ---- values ----

def test_periodic_value():
    bl = make_boundary("periodic")
    assert boundary_value(bl, np.zeros(4), RNG.normal(size=4)) == 0.0
    assert boundary_value(bl, np.ones(4), np.zeros(4)) == math.inf


def test_anti_periodic_value():
    bl = make_boundary("anti_periodic")
    assert boundary_value(bl, RNG.normal(size=4), np.zeros(4)) == 0.0
    assert boundary_value(bl, RNG.normal(size=4), np.ones(4)) == math.inf


@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_alpha_periodic_value(lam):
    bl = make_boundary("alpha_periodic", lam=lam)
    a, b = RNG.normal(size=4), RNG.normal(size=4)
    assert boundary_value(bl, a, b) == pytest.approx(lam / 4 * a @ a + b @ b / lam, rel=1e-14)


def test_alpha_conjugate_against_grid_sup():
    lam = 3.0
    bl = make_boundary("alpha_periodic", lam=lam)
    xs = np.linspace(-10, 10, 200001)
    for b in (-1.3, 0.4, 2.0):
        sup = np.max(b * xs - lam / 4 * xs ** 2)
        assert bl.psi.conjugate(np.array([b])) == pytest.approx(sup, abs=1e-8)


def test_initial_value_value():
    bl = make_boundary("initial_value", x0=X0)
    a, b = RNG.normal(size=4), RNG.normal(size=4)
    assert boundary_value(bl, a, b) == pytest.approx(a @ a / 4 - a @ X0 + (-b + X0) @ (-b + X0), rel=1e-13)


# ---- residuals ----

@pytest.mark.parametrize("kind", list(KINDS))
def test_residual_vanishes_on_satisfying_pairs(kind):
    bl = kinds()[kind]
    rng = np.random.default_rng(1)
    for _ in range(100):
        uT = rng.normal(size=4)
        assert boundary_residual(bl, satisfying(kind, bl, uT), uT) <= 1e-10


@pytest.mark.parametrize("kind", list(KINDS))
def test_residual_detects_violations(kind):
    bl = kinds()[kind]
    rng = np.random.default_rng(2)
    for _ in range(100):
        uT = rng.normal(size=4)
        delta = rng.normal(size=4)
        u0 = satisfying(kind, bl, uT) + delta
        assert boundary_residual(bl, u0, uT) >= 0.5 * np.linalg.norm(delta) - 1e-12


def test_residual_examples():
    bl = make_boundary("initial_value", x0=X0)
    assert boundary_residual(bl, X0, RNG.normal(size=4)) <= 1e-15
    e1 = np.eye(4)[0]
    assert boundary_residual(make_boundary("alpha_periodic", lam=3.0), e1, 2 * e1) == 0.0
    per = make_boundary("periodic")
    assert boundary_residual(per, e1, e1) == 0.0
    assert boundary_residual(per, e1, -e1) == pytest.approx(2.0)
    assert boundary_residual(make_boundary("anti_periodic"), e1, -e1) == 0.0


# ---- structure ----

@pytest.mark.parametrize("kind", list(KINDS))
def test_boundary_lagrangian_is_selfdual_and_bounded_below(kind):
    bl = kinds()[kind]
    L = Potential(bl.psi, dim=4)
    rng = np.random.default_rng(3)
    pts = [(rng.normal(size=4), rng.normal(size=4)) for _ in range(200)]
    assert selfduality_residual(L, pts) <= 1e-10
    vals = [boundary_value(bl, a, b) for a, b in pts]
    assert min(vals) > -math.inf
    if bl.smooth:
        # bounded below: the infimum of a quadratic plus the conjugate of a quadratic
        assert min(vals) >= -(X0 @ X0 if kind == "initial_value" else 0.0) - 1e-12


def test_gradient_matches_finite_differences():
    for bl in (kinds()["initial_value"], kinds()["alpha_periodic"]):
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=4), rng.normal(size=4)
        ga, gb = bl.gradient(a, b)
        h = 1e-6
        for i in range(4):
            e = np.eye(4)[i] * h
            assert (bl.value(a + e, b) - bl.value(a - e, b)) / (2 * h) == pytest.approx(ga[i], abs=1e-7)
            assert (bl.value(a, b + e) - bl.value(a, b - e)) / (2 * h) == pytest.approx(gb[i], abs=1e-7)


def test_nonsmooth_gradient_rejected():
    with pytest.raises(InvalidArgument):
        make_boundary("periodic").gradient(np.zeros(2), np.zeros(2))


def test_anti_periodic_3d_warns():
    with pytest.warns(DomainWarning):
        make_boundary("anti_periodic").warn_if_not_coercive(3)
