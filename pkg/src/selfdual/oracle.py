"""Classical time steppers used as independent oracles for the minimizer.

Only field-space primitives are shared with the variational solver; nothing here
touches the path functional.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidArgument, OracleConvergenceError
from .fields import SpectralField, TorusGrid, advect, h_norm2, project, shear, taylor_green
from .functional import Path

__all__ = [
    "StepperConfig",
    "step",
    "solve_ivp",
    "stokes_decay_path",
    "compare_paths",
    "manufactured_problem",
    "SCHEMES",
]

SCHEMES = ("crank_nicolson_picard", "implicit_euler_diffusion_explicit_advection")


@dataclass(frozen=True)
class StepperConfig:
    scheme: str = "crank_nicolson_picard"
    dt: float = 1e-2
    steps: int = 100
    max_inner: int = 50
    inner_tol: float = 1e-12
    advection: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidArgument(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")
        if self.steps < 1:
            raise InvalidArgument("steps must be positive")


def _forcing_at(grid, forcing, t):
    if forcing is None:
        return grid.zeros()
    f = forcing(t) if callable(forcing) else forcing
    return project(grid, np.asarray(getattr(f, "coefficients", f)))


def _step_array(cfg, grid, u, t, forcing):
    dt = cfg.dt
    a = grid.nu * grid.k2
    f = _forcing_at(grid, forcing, t + 0.5 * dt)
    lam0 = advect(grid, u) if cfg.advection else 0.0
    if cfg.scheme == "implicit_euler_diffusion_explicit_advection":
        return project(grid, (u / dt - lam0 - f) / (1.0 / dt + a))
    # Crank-Nicolson with trapezoidal advection, solved by Picard iteration
    left = 1.0 / dt + 0.5 * a
    rhs = u * (1.0 / dt - 0.5 * a) - 0.5 * lam0 - f
    u1 = project(grid, (rhs - 0.5 * lam0) / left)
    if not cfg.advection:
        return project(grid, rhs / left)
    res = math.inf
    for _ in range(cfg.max_inner):
        nxt = project(grid, (rhs - 0.5 * advect(grid, u1)) / left)
        res = math.sqrt(h_norm2(nxt - u1)) / max(1.0, math.sqrt(h_norm2(nxt)))
        u1 = nxt
        if res <= cfg.inner_tol:
            return u1
    raise OracleConvergenceError("Picard iteration did not converge", res)


def step(cfg: StepperConfig, u: SpectralField, t: float, forcing=None) -> SpectralField:
    """Advance ``u' + Lambda u + nu J u + f = 0`` by one step of size ``cfg.dt``."""
    return SpectralField(u.grid, _step_array(cfg, u.grid, u.coefficients, t, forcing))


def solve_ivp(cfg: StepperConfig, u0: SpectralField, T: float, forcing=None) -> Path:
    """March ``cfg.steps`` steps from ``u0``; ``steps * dt`` must equal ``T``."""
    if abs(cfg.steps * cfg.dt - T) > 1e-12 * max(1.0, T):
        raise InvalidArgument("steps * dt must equal T")
    grid = u0.grid
    nodes = grid.zeros(cfg.steps + 1)
    nodes[0] = u0.coefficients
    for i in range(cfg.steps):
        nodes[i + 1] = _step_array(cfg, grid, nodes[i], i * cfg.dt, forcing)
    return Path(grid, nodes, T)


def stokes_decay_path(u0: SpectralField, N: int, T: float) -> Path:
    """Exact unforced Stokes solution ``u_hat(k, t) = exp(-nu |k|^2 t) u_hat(k, 0)`` sampled on N steps."""
    g = u0.grid
    t = np.linspace(0.0, T, N + 1)
    decay = np.exp(-g.nu * g.k2[None] * t.reshape((-1,) + (1,) * g.d))
    nodes = decay[:, None] * u0.coefficients[None]
    return Path(g, nodes, T)


def compare_paths(a: Path, b: Path) -> float:
    """``max_i |a_i - b_i|_H / max(1, |b_i|_H)``."""
    if a.grid != b.grid or a.N != b.N:
        raise DimensionError("paths live on different grids or time grids")
    diff = np.sum(np.abs(a.nodes - b.nodes).reshape(a.N + 1, -1) ** 2, axis=1)
    return float(np.max(np.sqrt(diff) / np.maximum(1.0, np.sqrt(b.h_norms()))))


def manufactured_problem(grid: TorusGrid):
    """``u*(t) = cos t TG + sin t S`` with the forcing that makes it an exact solution.

    Returns ``(exact, forcing)``, both callables of ``t`` returning fields.
    """
    tg = taylor_green(grid).coefficients
    sh = shear(grid, mode=2).coefficients if grid.d == 2 else shear(grid, mode=1).coefficients

    def exact(t):
        return SpectralField(grid, math.cos(t) * tg + math.sin(t) * sh)

    def forcing(t):
        u = exact(t).coefficients
        du = -math.sin(t) * tg + math.cos(t) * sh
        return SpectralField(grid, project(grid, -du - advect(grid, u) - grid.nu * grid.k2 * u))

    return exact, forcing
