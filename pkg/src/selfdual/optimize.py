"""Preconditioned limited-memory quasi-Newton minimization with a value certificate.

The functionals minimized here are nonnegative with infimum 0, so reaching
``value <= value_tol * scale`` is itself a certificate that the iterate nearly
solves the underlying equation.  The objective protocol is small:

* ``to_vector(x)`` / ``from_vector(v)``: real coordinates of the unknown,
* ``value_vector(v)`` and ``value_and_grad_vector(v)``,
* ``precondition(g)``: an approximate inverse Hessian applied to a gradient,
* ``scale(x)``: the certificate scale ``max(1, |u_0|_H^2)``.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

__all__ = ["SolveOptions", "SolveTrace", "lbfgs", "minimize", "continuation", "fd_gradient_audit"]

log = logging.getLogger(__name__)

TERMINATIONS = ("value_certified", "gradient_small", "max_iters")


@dataclass(frozen=True)
class SolveOptions:
    value_tol: float = 1e-16
    grad_tol: float = 1e-15
    max_iters: int = 500
    memory: int = 10
    c1: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 40
    continuation: tuple = ()
    precondition: bool = True

    def __post_init__(self):
        if not self.value_tol > 0:
            raise InvalidArgument("value_tol must be positive")
        if not self.grad_tol >= 0:
            raise InvalidArgument("grad_tol must be nonnegative")
        if self.max_iters < 1:
            raise InvalidArgument("max_iters must be at least 1")
        if self.memory < 1:
            raise InvalidArgument("memory must be at least 1")
        if not 0 < self.shrink < 1:
            raise InvalidArgument("shrink must lie in (0, 1)")
        if not 0 < self.c1 < 1:
            raise InvalidArgument("c1 must lie in (0, 1)")
        if any(not e >= 0 for e in self.continuation):
            raise InvalidArgument("continuation weights must be nonnegative")


@dataclass
class SolveTrace:
    totals: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    termination: str = "max_iters"
    line_search_failed: bool = False
    scale: float = 1.0

    @property
    def iterations(self) -> int:
        return max(len(self.totals) - 1, 0)

    @property
    def final_total(self) -> float:
        return self.totals[-1]

    def record(self, total, grad_norm, step):
        self.totals.append(float(total))
        self.grad_norms.append(float(grad_norm))
        self.steps.append(float(step))

    def rows(self):
        return [(i, t, g, s) for i, (t, g, s) in enumerate(zip(self.totals, self.grad_norms, self.steps))]

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "termination": self.termination,
            "line_search_failed": self.line_search_failed,
            "initial_total": self.totals[0] if self.totals else None,
            "final_total": self.totals[-1] if self.totals else None,
            "final_grad_norm": self.grad_norms[-1] if self.grad_norms else None,
            "scale": self.scale,
        }


def lbfgs(value_and_grad, value, x0, opts: SolveOptions, precondition=None, scale: float = 1.0):
    """Minimize from ``x0``; returns the final point and its :class:`SolveTrace`."""
    trace = SolveTrace(scale=scale)
    x = np.array(x0, dtype=float)
    f, g = value_and_grad(x)
    trace.record(f, np.linalg.norm(g), 0.0)
    hist = deque(maxlen=opts.memory)
    apply_h0 = precondition if (precondition is not None and opts.precondition) else (lambda v: v)
    target = opts.value_tol * scale

    for _ in range(opts.max_iters + 1):
        if f <= target:
            trace.termination = "value_certified"
            return x, trace
        if np.linalg.norm(g) <= opts.grad_tol:
            trace.termination = "gradient_small"
            return x, trace
        if trace.iterations >= opts.max_iters:
            break
        d = -_two_loop(g, hist, apply_h0)
        slope = float(g @ d)
        if not slope < 0:
            hist.clear()
            d = -apply_h0(g)
            slope = float(g @ d)
        t = 1.0
        for _ in range(opts.max_backtracks):
            x_new = x + t * d
            f_new = value(x_new)
            if f_new <= f + opts.c1 * t * slope:
                break
            t *= opts.shrink
        else:
            if hist:
                hist.clear()
                continue
            trace.line_search_failed = True
            log.warning("line search failed after %d backtracks", opts.max_backtracks)
            break
        f_new, g_new = value_and_grad(x_new)
        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-300:
            hist.append((s, y, 1.0 / sy))
        x, f, g = x_new, f_new, g_new
        trace.record(f, np.linalg.norm(g), t)
    trace.termination = "max_iters"
    return x, trace


def _two_loop(g, hist, apply_h0):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(hist):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    r = apply_h0(q)
    for (s, y, rho), a in zip(hist, reversed(alphas)):
        b = rho * float(y @ r)
        r += (a - b) * s
    return r


def minimize(F, initial, opts: SolveOptions | None = None):
    """Minimize the objective ``F`` from ``initial``; returns ``(minimizer, trace)``."""
    opts = opts or SolveOptions()
    x0 = F.to_vector(initial)
    x, trace = lbfgs(F.value_and_grad_vector, F.value_vector, x0, opts,
                     precondition=F.precondition, scale=F.scale(initial))
    log.info("minimize: %s after %d iterations, total %.3e", trace.termination, trace.iterations, trace.final_total)
    return F.from_vector(x), trace


def continuation(F, initial, opts: SolveOptions | None = None, schedule=None):
    """Warm-started solves for a decreasing sequence of quartic weights."""
    opts = opts or SolveOptions()
    schedule = tuple(schedule if schedule is not None else opts.continuation)
    if not schedule:
        raise InvalidArgument("continuation needs a nonempty epsilon schedule")
    path = initial
    traces = []
    for eps in schedule:
        path, trace = minimize(F.with_epsilon(eps), path, opts)
        traces.append((eps, trace))
    return path, traces


def fd_gradient_audit(F, x, samples: int = 5, seed: int = 0, h: float | None = None) -> float:
    """Max relative error between analytic and central-difference directional derivatives."""
    rng = np.random.default_rng(seed)
    v = F.to_vector(x)
    _, g = F.value_and_grad_vector(v)
    worst = 0.0
    for _ in range(samples):
        d = F.random_direction(rng)
        d /= np.linalg.norm(d)
        step = h if h is not None else 1e-5 * max(1.0, np.linalg.norm(v))
        fd = (F.value_vector(v + step * d) - F.value_vector(v - step * d)) / (2 * step)
        an = float(g @ d)
        denom = max(abs(fd), abs(an), np.finfo(float).tiny)
        worst = max(worst, abs(fd - an) / denom)
    return worst
