"""Scenario runners: configuration in, solution and acceptance checks out."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .boundary import make_boundary
from .config import RunConfig
from .errors import InvalidArgument
from .fields import (
    SpectralField,
    TorusGrid,
    advect,
    h_norm2,
    random_field,
    regularity_ratio,
    shear,
    taylor_green,
)
from .functional import DiscreteFunctional, Path, StationaryFunctional, energy_inequality_check
from .optimize import SolveOptions, continuation, minimize
from .oracle import StepperConfig, compare_paths, solve_ivp, stokes_decay_path

__all__ = ["RunResult", "build_field", "run_scenario"]

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    report: dict
    passed: bool
    certified: bool
    path: Path | None = None
    field: SpectralField | None = None
    traces: list = dc_field(default_factory=list)
    energy_curve: dict | None = None


def build_field(grid: TorusGrid, preset_cfg: dict, seed: int) -> SpectralField:
    """Field from a named preset."""
    preset = preset_cfg["preset"]
    amp = float(preset_cfg.get("amplitude", 1.0))
    if preset == "zero":
        return SpectralField(grid, grid.zeros())
    if preset == "taylor_green":
        return taylor_green(grid, amp)
    if preset == "shear":
        return shear(grid, amp, int(preset_cfg.get("mode", 1)))
    if preset == "taylor_green_shear":
        mix = float(preset_cfg.get("mix", 0.5))
        return taylor_green(grid, amp) + shear(grid, amp * mix, int(preset_cfg.get("mode", 2)))
    if preset == "random_seeded":
        return random_field(grid, int(preset_cfg.get("seed", seed)), amp, preset_cfg.get("kmax", 4))
    raise InvalidArgument(f"unknown preset {preset!r}")


def _options(cfg: RunConfig) -> SolveOptions:
    s = cfg["solver"]
    return SolveOptions(
        value_tol=s["value_tol"],
        grad_tol=s["grad_tol"],
        max_iters=s["max_iters"],
        memory=s["memory"],
        c1=s["c1"],
        shrink=s["shrink"],
        continuation=tuple(s["continuation"]),
    )


def _check(value, threshold):
    ok = bool(math.isfinite(value) and value <= threshold)
    return {"value": float(value), "threshold": float(threshold), "pass": ok}


def _ratio_stats(path: Path) -> dict:
    ratios = []
    for i in range(path.N + 1):
        u = path.node(i)
        if u.h_norm2() > 1e-24:
            ratios.append(regularity_ratio(u))
    if not ratios:
        return {"count": 0}
    r = np.array(ratios)
    return {"count": len(r), "min": float(r.min()), "max": float(r.max()), "mean": float(r.mean())}


def run_scenario(cfg: RunConfig, seed: int | None = None) -> RunResult:
    seed = cfg["seed"] if seed is None else int(seed)
    if cfg.scenario == "ns_stationary":
        return _run_stationary(cfg, seed)
    return _run_evolution(cfg, seed)


def _run_evolution(cfg: RunConfig, seed: int) -> RunResult:
    gspec, tspec, thr = cfg["grid"], cfg["time"], cfg["thresholds"]
    grid = TorusGrid(gspec["d"], gspec["n"], gspec["nu"])
    N, T = tspec["N"], tspec["T"]
    scen = cfg.scenario
    u0 = build_field(grid, cfg["initial"], seed)
    f = build_field(grid, cfg["forcing"], seed + 1)
    bspec = cfg["boundary"]
    kind = bspec["kind"]
    boundary = make_boundary(kind, x0=u0.coefficients if kind == "initial_value" else None, lam=cfg.lam)
    advection = scen not in ("gradient_flow_1mode", "stokes_decay")
    F = DiscreteFunctional(grid, N, T, boundary, forcing=f, advection=advection)
    initial = Path.constant(u0, N, T) if kind == "initial_value" else Path.zeros(grid, N, T)
    opts = _options(cfg)
    traces = []
    if scen == "ns3d":
        path, stages = continuation(F, initial, opts)
        traces = stages
        trace = stages[-1][1]
        final_eps = stages[-1][0]
    else:
        path, trace = minimize(F, initial, opts)
        traces = [(0.0, trace)]
        final_eps = 0.0

    F0 = F.with_epsilon(0.0)
    rep = F0.report(path)
    norms = path.h_norms()
    u0_norm2 = float(norms[0])
    scale = F.scale(initial)
    certified = trace.termination == "value_certified"
    checks = {"certified": {"value": float(certified), "threshold": 1.0, "pass": certified}}
    if scen == "ns3d":
        checks["functional_total"] = _check(rep.total, thr["total"] * scale)
        ineq = energy_inequality_check(F0, path, integrand=rep.integrand)
        checks["energy_inequality"] = _check(ineq, thr["energy"] * max(u0_norm2, np.finfo(float).tiny))
    else:
        checks["functional_total"] = _check(rep.total, thr["total"] * scale)
        checks["energy_identity"] = _check(rep.energy_residual, thr["energy"] * max(u0_norm2, np.finfo(float).tiny))
        checks["pde_residual"] = _check(rep.pde_residual, thr["pde"] * scale)

    uT_norm = math.sqrt(norms[-1])
    if kind == "alpha_periodic":
        alpha = boundary.alpha
        checks["boundary_residual"] = _check(rep.boundary_residual, thr["boundary"] * uT_norm)
        rel = math.sqrt(h_norm2(path.nodes[0] - alpha * path.nodes[-1]))
        checks["alpha_relation"] = _check(rel, thr["alpha_relation"] * uT_norm)
    elif kind == "anti_periodic":
        rel = math.sqrt(h_norm2(path.nodes[0] + path.nodes[-1]))
        checks["boundary_residual"] = _check(rep.boundary_residual, thr["boundary"] * scale)
        checks["alpha_relation"] = _check(rel, thr["alpha_relation"] * scale)
    else:
        checks["boundary_residual"] = _check(rep.boundary_residual, thr["boundary"] * scale)

    report = {
        "schema": 1,
        "scenario": scen,
        "seed": seed,
        "config": cfg.data,
        "scale": scale,
        "epsilon_final_stage": final_eps,
        "functional": rep.to_dict(),
        "solver": trace.summary(),
        "stages": [{"epsilon": e, **t.summary()} for e, t in traces],
        "boundary": {"kind": kind, "lambda": boundary.lam, "alpha": boundary.alpha,
                     "residual": rep.boundary_residual},
        "regularity_ratio": _ratio_stats(path),
        "norms_h2": [float(v) for v in norms],
    }
    if scen == "ns3d":
        report["energy_inequality"] = checks["energy_inequality"]["value"]

    if not advection and kind == "initial_value":
        exact = stokes_decay_path(u0, N, T)
        err = compare_paths(path, exact)
        report["exact_comparison"] = err
        checks["exact_agreement"] = _check(err, thr["exact"])

    ocfg = cfg["oracle"]
    if ocfg["enabled"] and advection:
        stepper = StepperConfig(ocfg["scheme"], T / N, N, ocfg["max_inner"], ocfg["inner_tol"])
        ref = solve_ivp(stepper, path.node(0), T, forcing=f)
        err = compare_paths(path, ref)
        # in 3D the minimized functional carries the epsilon term, so the comparison is informational
        gating = scen != "ns3d"
        report["oracle"] = {"scheme": ocfg["scheme"], "relative_difference": err, "gating": gating}
        if gating:
            checks["oracle_agreement"] = _check(err, thr["oracle"])
    else:
        report["oracle"] = None

    passed = all(c["pass"] for c in checks.values())
    report["checks"] = checks
    report["passed"] = passed
    report["certified"] = certified
    acc = np.concatenate([[0.0], np.cumsum(F0.weights * rep.integrand)])
    curve = {"times": path.times, "norm2": norms, "dissipated": 2 * acc}
    return RunResult(report, passed, certified, path=path, traces=traces, energy_curve=curve)


def _run_stationary(cfg: RunConfig, seed: int) -> RunResult:
    gspec, thr = cfg["grid"], cfg["thresholds"]
    grid = TorusGrid(gspec["d"], gspec["n"], gspec["nu"])
    target = build_field(grid, cfg["target"], seed + 2)
    us = target.coefficients
    # f = nu Delta u* - Lambda u*, so that Lambda u* + nu J u* + f = 0
    f = -grid.nu * grid.k2 * us - advect(grid, us)
    S = StationaryFunctional(grid, f)
    start = build_field(grid, cfg["initial"], seed)
    u, trace = minimize(S, start, _options(cfg))
    rep = S.report(u)
    scale = S.scale(start)
    err = math.sqrt(h_norm2(u.coefficients - us))
    certified = trace.termination == "value_certified"
    checks = {
        "certified": {"value": float(certified), "threshold": 1.0, "pass": certified},
        "functional_total": _check(rep.total, thr["total"] * scale),
        "recovery": _check(err, thr["recovery"]),
    }
    passed = all(c["pass"] for c in checks.values())
    report = {
        "schema": 1,
        "scenario": cfg.scenario,
        "seed": seed,
        "config": cfg.data,
        "scale": scale,
        "functional": rep.to_dict(),
        "solver": trace.summary(),
        "stages": [{"epsilon": 0.0, **trace.summary()}],
        "recovery_error": err,
        "regularity_ratio": {"count": 1, "min": regularity_ratio(u), "max": regularity_ratio(u),
                             "mean": regularity_ratio(u)} if u.h_norm2() > 0 else {"count": 0},
        "oracle": None,
        "checks": checks,
        "passed": passed,
        "certified": certified,
    }
    return RunResult(report, passed, certified, field=u, traces=[(0.0, trace)])
