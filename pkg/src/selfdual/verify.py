"""Property batteries behind ``selfdual verify <suite>``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import alpha_from_lambda, make_boundary
from .convex import PowerNorm, QuadraticForm
from .fields import (
    SpectralField,
    TorusGrid,
    advection,
    duality_map,
    from_physical,
    h_norm2,
    inner,
    leray_project,
    project,
    random_field,
    taylor_green,
    to_physical,
    x_norm2,
    xstar_norm2,
)
from .functional import DiscreteFunctional, Path
from .lagrangians import (
    Potential,
    SkewPotential,
    TabulatedLagrangian,
    regularize,
    selfduality_residual,
)
from .optimize import fd_gradient_audit
from .oracle import StepperConfig, manufactured_problem, solve_ivp, stokes_decay_path

__all__ = ["Check", "SUITES", "run_suite", "format_table", "catalog_lagrangians", "observed_order"]


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


def _le(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value <= threshold))


def _ge(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value >= threshold))


def catalog_lagrangians(dim: int = 3, seed: int = 0):
    """Closed-form anti-selfdual Lagrangians used by the duality battery."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.5, 2.0, dim)
    lin = rng.normal(size=dim)
    G = rng.normal(size=(dim, dim))
    skew = G - G.T
    quad = QuadraticForm(w, linear=lin)
    cat = {
        "potential_quadratic": Potential(quad, dim=dim),
        "potential_power3": Potential(PowerNorm(3.0, 0.7), dim=dim),
        "skew_quadratic": SkewPotential(quad, skew),
    }
    for variant in ("first", "second", "both"):
        cat[f"regularized_{variant}"] = regularize(Potential(quad, dim=dim), 0.5, variant)
    cat["regularized_skew_second"] = regularize(SkewPotential(quad, skew), 0.3, "second")
    return cat


def _duality_suite(samples=1000, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for name, L in catalog_lagrangians().items():
        n = L.dim
        pts = [(rng.normal(size=n), rng.normal(size=n)) for _ in range(samples)]
        nonneg = min(L.value(x, p) + float(x @ p) for x, p in pts)
        out.append(_ge(f"{name}: L(x,p)+<x,p>", nonneg, -1e-10))
        out.append(_le(f"{name}: selfduality residual", selfduality_residual(L, pts), 1e-8))
        diag = max(L.hamiltonian(x, -x) for x, _ in pts)
        out.append(_le(f"{name}: H(x,-x)", diag, 1e-10))
        odd = max(L.hamiltonian(-y, -x) + L.hamiltonian(x, y) for x, y in pts)
        out.append(_le(f"{name}: H(-y,-x)+H(x,y)", odd, 1e-10))
    xs = np.linspace(-2, 2, 41)
    ps = np.linspace(-4, 4, 81)
    T = TabulatedLagrangian.from_function(Potential(QuadraticForm(1.0), dim=1), xs, ps)
    h = max(xs[1] - xs[0], ps[1] - ps[0])
    grid_tol = h * h
    pts = [(rng.uniform(-1.5, 1.5, 1), rng.uniform(-1.5, 1.5, 1)) for _ in range(200)]
    out.append(_le("tabulated: selfduality residual", selfduality_residual(T, pts), grid_tol))
    out.append(_ge("tabulated: L(x,p)+<x,p>", min(T.value(x, p) + float(x @ p) for x, p in pts), -1e-10))
    out.append(_le("tabulated: H(-y,-x)+H(x,y)",
                   max(T.hamiltonian(-y, -x) + T.hamiltonian(x, y) for x, y in pts), 1e-10))
    G = np.random.default_rng(seed + 1).normal(size=(3, 3))
    bad = SkewPotential(QuadraticForm(1.0), G + G.T + np.eye(3))
    pts = [(rng.normal(size=3), rng.normal(size=3)) for _ in range(50)]
    out.append(_ge("negative control: non-skew residual", selfduality_residual(bad, pts), 0.1))
    return out


def _boundary_suite(samples=100, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    x0 = rng.normal(size=4)
    for lam, alpha in ((1 / 3, -0.5), (1.0, 0.0), (3.0, 0.5)):
        out.append(_le(f"alpha map lambda={lam:.4g}", abs(alpha_from_lambda(lam) - alpha), 0.0))
    kinds = {
        "initial_value": (make_boundary("initial_value", x0=x0), lambda uT: x0.copy()),
        "periodic": (make_boundary("periodic"), lambda uT: uT.copy()),
        "anti_periodic": (make_boundary("anti_periodic"), lambda uT: -uT),
        "alpha_periodic": (make_boundary("alpha_periodic", lam=3.0), lambda uT: 0.5 * uT),
    }
    for name, (bl, u0_of) in kinds.items():
        worst = 0.0
        for _ in range(samples):
            uT = rng.normal(size=4)
            worst = max(worst, bl.residual(u0_of(uT), uT))
        out.append(_le(f"{name}: residual on satisfying pairs", worst, 1e-10))
    return out


def _fields_suite(seed=0):
    out = []
    g = TorusGrid(2, 32, 0.1)
    rng = np.random.default_rng(seed)
    raw = from_physical(g, rng.standard_normal(g.shape))
    p1 = project(g, raw)
    out.append(_le("projection idempotent", np.abs(project(g, p1) - p1).max(), 1e-14))
    div = np.abs(np.sum(g.wavevectors * leray_project(g, raw), axis=0)).max()
    out.append(_le("projection divergence-free", div, 1e-12 * math.sqrt(h_norm2(raw))))
    worst_skew = worst_j1 = worst_j2 = worst_parseval = 0.0
    for s in range(20):
        for d, n in ((2, 32), (3, 8)):
            grid = TorusGrid(d, n, 0.1)
            u = random_field(grid, seed + s, 1.0)
            v = random_field(grid, seed + 100 + s, 1.0)
            scale = math.sqrt(u.h_norm2()) * u.x_norm2()
            worst_skew = max(worst_skew, abs(inner(advection(u), u)) / scale)
            J = duality_map(u)
            worst_j1 = max(worst_j1, abs(inner(J, u) / u.x_norm2() - 1))
            worst_j2 = max(worst_j2, abs(math.sqrt(xstar_norm2(grid, J) / u.x_norm2()) - 1))
            quad = float(np.mean(np.sum(to_physical(grid, u) * to_physical(grid, v), axis=0)))
            worst_parseval = max(worst_parseval, abs(quad - inner(u, v)) / (math.sqrt(u.h_norm2() * v.h_norm2())))
    out.append(_le("advection skew |<Lu,u>|/(|u|_H |u|_X^2)", worst_skew, 1e-10))
    out.append(_le("<Ju,u> = |u|_X^2", worst_j1, 1e-12))
    out.append(_le("|Ju|_X* = |u|_X", worst_j2, 1e-12))
    out.append(_le("Parseval", worst_parseval, 1e-12))
    valid = all(SpectralField(g, advection(random_field(g, s)).coefficients).is_valid() for s in range(5))
    out.append(Check("advection output satisfies field invariants", float(valid), 1.0, valid))
    return out


def _random_path(grid, N, T, seed, amplitude=0.5):
    return Path(grid, np.stack([random_field(grid, seed + i, amplitude, 3).coefficients for i in range(N + 1)]), T)


def gradient_audits(seed=0, samples=4):
    """Relative FD errors for the standard randomized functionals."""
    res = {}
    g2 = TorusGrid(2, 8, 0.1)
    f2 = random_field(g2, seed + 50, 0.3, 3)
    P2 = _random_path(g2, 4, 1.0, seed)
    F = DiscreteFunctional(g2, 4, 1.0, make_boundary("initial_value", x0=0.9 * P2.nodes[0]), forcing=f2)
    res["2d n=8 N=4"] = fd_gradient_audit(F, P2, samples, seed)
    Fq = DiscreteFunctional(g2, 4, 1.0, make_boundary("alpha_periodic", lam=3.0), forcing=f2, advection=False)
    # central differences are exact for a quadratic, so a large step only trims roundoff
    res["quadratic-only 2d"] = fd_gradient_audit(Fq, P2, samples, seed, h=1e-2)
    g3 = TorusGrid(3, 8, 0.1)
    P3 = _random_path(g3, 4, 1.0, seed + 20)
    F3 = DiscreteFunctional(g3, 4, 1.0, make_boundary("initial_value", x0=0.9 * P3.nodes[0]),
                            forcing=random_field(g3, seed + 60, 0.3, 2), epsilon=0.1)
    res["3d eps=0.1 n=8 N=4"] = fd_gradient_audit(F3, P3, samples, seed)
    return res


def _gradients_suite(seed=0):
    res = gradient_audits(seed)
    return [_le(f"FD audit {k}", v, 1e-8 if k.startswith("quadratic") else 1e-5) for k, v in res.items()]


def observed_order(hs, errs) -> float:
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def stokes_refinement(Ns=(8, 16, 32), n=32, nu=0.1, T=1.0):
    """Functional value of the exact Stokes decay path for several N."""
    g = TorusGrid(2, n, nu)
    u0 = taylor_green(g)
    bl = make_boundary("initial_value", x0=u0.coefficients)
    totals = []
    for N in Ns:
        F = DiscreteFunctional(g, N, T, bl, advection=False)
        totals.append(F.report(stokes_decay_path(u0, N, T)).gap_total)
    return np.array([T / N for N in Ns]), np.array(totals)


def cn_refinement(Ns=(20, 40, 80), n=32, nu=0.1, T=1.0):
    g = TorusGrid(2, n, nu)
    exact, forcing = manufactured_problem(g)
    errs = []
    for N in Ns:
        P = solve_ivp(StepperConfig("crank_nicolson_picard", T / N, N), exact(0.0), T, forcing)
        errs.append(math.sqrt(h_norm2(P.nodes[-1] - exact(T).coefficients)))
    return np.array([T / N for N in Ns]), np.array(errs)


def _refinement_suite(seed=0):
    hs, totals = stokes_refinement()
    hs2, errs = cn_refinement()
    return [
        _ge("Stokes-exact functional order in dt", observed_order(hs, totals), 1.9),
        _ge("Crank-Nicolson order on manufactured solution", observed_order(hs2, errs), 1.9),
    ]


SUITES = {
    "duality": _duality_suite,
    "boundary": _boundary_suite,
    "fields": _fields_suite,
    "gradients": _gradients_suite,
    "refinement": _refinement_suite,
}


def run_suite(name: str):
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()


def format_table(checks) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check'.ljust(width)}  {'value':>12}  {'threshold':>12}  result"]
    for c in checks:
        lines.append(f"{c.name.ljust(width)}  {c.value:12.4e}  {c.threshold:12.4e}  {'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)
