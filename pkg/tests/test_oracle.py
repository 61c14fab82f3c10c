import math

import numpy as np
import pytest

from selfdual import (
    DimensionError,
    InvalidArgument,
    OracleConvergenceError,
    Path,
    SpectralField,
    StepperConfig,
    TorusGrid,
    compare_paths,
    random_field,
    solve_ivp,
    step,
    stokes_decay_path,
    taylor_green,
)
from selfdual.fields import h_norm2
from selfdual.oracle import SCHEMES, manufactured_problem

G = TorusGrid(2, 32, 0.1)


def test_config_validation():
    with pytest.raises(InvalidArgument):
        StepperConfig(scheme="rk4")
    with pytest.raises(InvalidArgument):
        StepperConfig(dt=0.0)
    with pytest.raises(InvalidArgument):
        StepperConfig(steps=0)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_zero_stays_zero(scheme):
    z = SpectralField(G, G.zeros())
    assert np.abs(step(StepperConfig(scheme), z, 0.0).coefficients).max() == 0.0
    P = solve_ivp(StepperConfig(scheme, 0.1, 10), z, 1.0)
    assert np.abs(P.nodes).max() == 0.0


def test_taylor_green_cn_step_matches_decay():
    u = taylor_green(G)
    errs = []
    for dt in (0.1, 0.05, 0.025):
        out = step(StepperConfig(dt=dt), u, 0.0)
        exact = math.exp(-2 * G.nu * dt) * u.coefficients
        errs.append(np.abs(out.coefficients - exact).max())
    # a CN step is exact to third order locally, so halving dt cuts the step error about eightfold
    assert errs[0] / errs[1] == pytest.approx(8.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(8.0, rel=0.05)


def test_stokes_decay_path_is_analytic():
    u0 = random_field(G, 0)
    P = stokes_decay_path(u0, 4, 2.0)
    assert np.abs(P.nodes[0] - u0.coefficients).max() == 0.0
    k2 = np.broadcast_to(G.k2, G.shape)
    assert np.allclose(P.nodes[-1], np.exp(-G.nu * k2 * 2.0) * u0.coefficients, rtol=1e-15, atol=0)


def test_stokes_ivp_matches_analytic_at_256_steps():
    u0 = taylor_green(G) + random_field(G, 1, 0.5, 3)
    cfg = StepperConfig(dt=1.0 / 256, steps=256, advection=False)
    P = solve_ivp(cfg, u0, 1.0)
    exact = stokes_decay_path(u0, 256, 1.0)
    assert math.sqrt(h_norm2(P.nodes[-1] - exact.nodes[-1])) <= 1e-6


def test_solve_ivp_checks_horizon():
    with pytest.raises(InvalidArgument):
        solve_ivp(StepperConfig(dt=0.1, steps=5), taylor_green(G), 1.0)


def test_cn_order_on_manufactured_solution():
    exact, forcing = manufactured_problem(G)
    errs = []
    Ns = (20, 40, 80)
    for N in Ns:
        P = solve_ivp(StepperConfig(dt=1.0 / N, steps=N), exact(0.0), 1.0, forcing)
        errs.append(math.sqrt(h_norm2(P.nodes[-1] - exact(1.0).coefficients)))
    order = np.polyfit(np.log([1.0 / N for N in Ns]), np.log(errs), 1)[0]
    assert order >= 1.9
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_imex_is_first_order():
    exact, forcing = manufactured_problem(G)
    errs = []
    for N in (40, 80):
        cfg = StepperConfig("implicit_euler_diffusion_explicit_advection", 1.0 / N, N)
        P = solve_ivp(cfg, exact(0.0), 1.0, forcing)
        errs.append(math.sqrt(h_norm2(P.nodes[-1] - exact(1.0).coefficients)))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.15)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_invariants_preserved(scheme):
    u0 = random_field(G, 2, 2.0)
    f = random_field(G, 3, 0.5)
    P = solve_ivp(StepperConfig(scheme, 0.05, 20), u0, 1.0, forcing=f)
    for i in range(P.N + 1):
        v = P.node(i).violations()
        assert v["divergence"] <= 1e-12 and v["reality"] <= 1e-12 and v["mean"] == 0.0


def test_picard_failure_reports_residual():
    u0 = random_field(G, 4, 50.0)
    cfg = StepperConfig(dt=0.5, steps=1, max_inner=3)
    with pytest.raises(OracleConvergenceError) as exc:
        step(cfg, u0, 0.0)
    assert exc.value.residual > cfg.inner_tol


# ---- path comparison ----

def test_compare_identical_is_zero():
    P = stokes_decay_path(random_field(G, 5), 4, 1.0)
    assert compare_paths(P, P) == 0.0


def test_compare_single_node_perturbation():
    b = stokes_decay_path(random_field(G, 6, 3.0), 4, 1.0)
    delta = random_field(G, 7, 1.0)
    nodes = b.nodes.copy()
    nodes[2] = nodes[2] + 0.01 * delta.coefficients
    a = Path(G, nodes, 1.0)
    expected = 0.01 * math.sqrt(delta.h_norm2()) / max(1.0, math.sqrt(h_norm2(b.nodes[2])))
    assert compare_paths(a, b) == pytest.approx(expected, rel=1e-12)


def test_compare_mismatch():
    a = stokes_decay_path(taylor_green(G), 4, 1.0)
    with pytest.raises(DimensionError):
        compare_paths(a, stokes_decay_path(taylor_green(G), 5, 1.0))
    G16 = TorusGrid(2, 16, 0.1)
    with pytest.raises(DimensionError):
        compare_paths(a, stokes_decay_path(taylor_green(G16), 4, 1.0))
