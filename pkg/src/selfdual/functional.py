"""The discrete selfdual path functional for ``u' + Lambda u + nu J u + f = 0``.

With midpoint states ``m_i = (u_i + u_{i+1})/2`` and difference quotients
``D_i = (u_{i+1} - u_i)/dt`` the functional is

    I(u) = sum_i dt [Phi_i(m_i) + Phi_i*(-D_i - Lambda m_i)] + l(u_0 - u_N, (u_0 + u_N)/2)

where ``Phi_i(u) = (nu/2)|u|_X^2 + <f_i, u>`` (plus ``(eps/4)|u|_X^4`` when
regularized).  Summation by parts turns it into a sum of nonnegative Fenchel
gaps, minus the advection pairing ``sum dt <Lambda m_i, m_i>`` which vanishes
for the dealiased operator:

    I(u) = sum_i dt gap_i + boundary_gap - sum_i dt <Lambda m_i, m_i>.

The optimizer works with the gap form, which has no cancellation near the
minimum value 0; the report carries both forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import BoundaryLagrangian, boundary_residual, boundary_value
from .convex import QuadraticForm, QuarticNorm
from .errors import DimensionError, InvalidArgument, UnsupportedOperation
from .fields import (
    SpectralField,
    TorusGrid,
    advect,
    advect_adjoint,
    from_physical,
    h_norm2,
    inner,
    project,
    xstar_norm2,
)

__all__ = [
    "Path",
    "FunctionalReport",
    "DiscreteFunctional",
    "StationaryFunctional",
    "functional_value",
    "functional_gradient",
    "energy_identity_residual",
    "energy_inequality_check",
    "stationary_functional",
]


def _abs2(c):
    return c.real ** 2 + c.imag ** 2


class Path:
    """Nodes ``u_0 .. u_N`` on a uniform time grid of horizon ``T``."""

    def __init__(self, grid: TorusGrid, nodes, T: float):
        nodes = np.array(nodes, dtype=complex)
        if nodes.ndim != grid.d + 2 or nodes.shape[1:] != grid.shape:
            raise DimensionError(f"path nodes must have shape (N+1,) + {grid.shape}")
        if nodes.shape[0] < 3:
            raise InvalidArgument("a path needs N >= 2 intervals")
        if not T > 0:
            raise InvalidArgument("horizon T must be positive")
        nodes.setflags(write=False)
        self.grid = grid
        self.nodes = nodes
        self.T = float(T)

    @property
    def N(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)

    def node(self, i) -> SpectralField:
        return SpectralField(self.grid, self.nodes[i])

    def __len__(self):
        return self.N + 1

    @classmethod
    def from_fields(cls, fields, T):
        fields = list(fields)
        return cls(fields[0].grid, np.stack([f.coefficients for f in fields]), T)

    @classmethod
    def constant(cls, u0: SpectralField, N: int, T: float):
        return cls(u0.grid, np.broadcast_to(u0.coefficients, (N + 1,) + u0.grid.shape), T)

    @classmethod
    def zeros(cls, grid: TorusGrid, N: int, T: float):
        return cls(grid, grid.zeros(N + 1), T)

    def h_norms(self) -> np.ndarray:
        return np.sum(_abs2(self.nodes).reshape(self.N + 1, -1), axis=1)


@dataclass
class FunctionalReport:
    """Decomposition of the functional value along a path."""

    total: float
    integrand: np.ndarray
    gaps: np.ndarray
    boundary: float
    boundary_gap: float
    skew: float
    gap_total: float
    energy_residual: float
    pde_residual: float
    boundary_residual: float
    pde_residuals: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "gap_total": self.gap_total,
            "boundary_term": self.boundary,
            "boundary_gap": self.boundary_gap,
            "skew_term": self.skew,
            "energy_residual": self.energy_residual,
            "pde_residual": self.pde_residual,
            "boundary_residual": self.boundary_residual,
            "integrand": [float(v) for v in self.integrand],
            "gaps": [float(v) for v in self.gaps],
            "pde_residuals": [float(v) for v in self.pde_residuals] if self.pde_residuals is not None else [],
        }


def _forcing_array(grid, forcing, N, T):
    """Forcing on each interval, sampled at the interval midpoint and projected."""
    out = grid.zeros(N)
    if forcing is None:
        return out
    if callable(forcing):
        dt = T / N
        for i in range(N):
            out[i] = np.asarray(getattr(forcing((i + 0.5) * dt), "coefficients", forcing((i + 0.5) * dt)))
    else:
        f = np.asarray(getattr(forcing, "coefficients", forcing))
        if f.shape == grid.shape:
            out[:] = f
        elif f.shape == (N,) + grid.shape:
            out[:] = f
        else:
            raise DimensionError("forcing must be a field, a per-interval stack or a callable of t")
    return project(grid, out)


class DiscreteFunctional:
    """Midpoint discretization of the evolution functional on a fixed time grid."""

    def __init__(self, grid: TorusGrid, N: int, T: float, boundary: BoundaryLagrangian,
                 forcing=None, epsilon: float = 0.0, advection: bool = True):
        if N < 2:
            raise InvalidArgument("N must be at least 2")
        if not T > 0:
            raise InvalidArgument("T must be positive")
        if epsilon < 0:
            raise InvalidArgument("epsilon must be nonnegative")
        self.grid = grid
        self.N = int(N)
        self.T = float(T)
        self.dt = self.T / self.N
        self.boundary = boundary
        self.epsilon = float(epsilon)
        self.advection = bool(advection)
        self.forcing = _forcing_array(grid, forcing, self.N, self.T)
        self.weights = np.full(self.N, self.dt)
        boundary.warn_if_not_coercive(grid.d)
        self._op = np.broadcast_to(grid.k2, grid.shape)
        self._precond = None

    def with_epsilon(self, epsilon: float) -> "DiscreteFunctional":
        """The same functional with another quartic regularization weight."""
        other = object.__new__(DiscreteFunctional)
        other.__dict__.update(self.__dict__)
        other.epsilon = float(epsilon)
        return other

    def potential(self, i: int):
        """``Phi_i`` as a convex potential on coefficient arrays."""
        base = QuadraticForm(self._op, linear=self.forcing[i], scale=self.grid.nu)
        return QuarticNorm(self.epsilon, base) if self.epsilon > 0 else base

    @property
    def potentials(self):
        return [self.potential(i) for i in range(self.N)]

    # -- path parameterization ------------------------------------------------
    @property
    def structural(self) -> int | None:
        return self.boundary.endpoint_sign

    def free_count(self) -> int:
        return self.N if self.structural is not None else self.N + 1

    def expand(self, free) -> np.ndarray:
        """Full node array from the free nodes (``u_N = s u_0`` when structural)."""
        if self.structural is None:
            return free
        return np.concatenate([free, self.structural * free[:1]], axis=0)

    def reduce(self, full_grad) -> np.ndarray:
        """Chain rule through :meth:`expand`."""
        if self.structural is None:
            return full_grad
        g = full_grad[:-1].copy()
        g[0] += self.structural * full_grad[-1]
        return g

    def to_vector(self, path: Path) -> np.ndarray:
        self._check_path(path)
        free = path.nodes[: self.free_count()]
        return np.ascontiguousarray(free).view(float).ravel().copy()

    def from_vector(self, v) -> Path:
        free = np.asarray(v, dtype=float).view(complex).reshape((self.free_count(),) + self.grid.shape)
        return Path(self.grid, self.expand(free), self.T)

    def _check_path(self, path: Path):
        if path.grid != self.grid:
            raise DimensionError("path and functional live on different grids")
        if path.N != self.N or abs(path.T - self.T) > 1e-12 * self.T:
            raise DimensionError("path and functional have different time grids")

    # -- core evaluation --------------------------------------------------------
    def _pieces(self, U):
        m = 0.5 * (U[1:] + U[:-1])
        D = (U[1:] - U[:-1]) / self.dt
        lam = advect(self.grid, m) if self.advection else np.zeros_like(m)
        return m, D, lam

    def _boundary_gap(self, U):
        if self.structural is not None:
            return 0.0
        a = U[0] - U[-1]
        b = 0.5 * (U[0] + U[-1])
        return self.boundary.psi.fenchel_gap(a, -b)

    def _gaps(self, U, m, D, lam):
        if self.epsilon == 0.0:
            r = D + lam + self.grid.nu * self.grid.k2 * m + self.forcing
            g = np.sum((self.grid.inv_k2 * _abs2(r)).reshape(self.N, -1), axis=1) / (2 * self.grid.nu)
            return g, r
        q = -D - lam
        g = np.array([self.potential(i).fenchel_gap(m[i], q[i]) for i in range(self.N)])
        return g, None

    def objective(self, U) -> float:
        """Gap form of the functional for a full node array."""
        m, D, lam = self._pieces(U)
        gaps, _ = self._gaps(U, m, D, lam)
        return float(self.dt * np.sum(gaps) + self._boundary_gap(U))

    def objective_and_gradient(self, U):
        """Gap-form value and its H-gradient with respect to every node."""
        grid, dt = self.grid, self.dt
        m, D, lam = self._pieces(U)
        gaps, r = self._gaps(U, m, D, lam)
        if self.epsilon == 0.0:
            w = grid.inv_k2 * r / grid.nu
            gm = r.copy()
            gD = w
            adj_arg = w
        else:
            q = -D - lam
            gm = np.empty_like(m)
            v = np.empty_like(m)
            for i in range(self.N):
                phi = self.potential(i)
                v[i] = phi.conjugate_gradient(q[i]) - m[i]
                gm[i] = phi.subgradient(m[i]) - q[i]
            gD = -v
            adj_arg = -v
        if self.advection:
            gm = gm + advect_adjoint(grid, m, adj_arg)
        grad = np.zeros_like(U)
        grad[:-1] += dt * (0.5 * gm) - gD
        grad[1:] += dt * (0.5 * gm) + gD
        value = float(dt * np.sum(gaps))
        if self.structural is None:
            a = U[0] - U[-1]
            b = 0.5 * (U[0] + U[-1])
            psi = self.boundary.psi
            value += psi.fenchel_gap(a, -b)
            ga = psi.subgradient(a) + b
            gb = a - psi.conjugate_gradient(-b)
            grad[0] += ga + 0.5 * gb
            grad[-1] += -ga + 0.5 * gb
        return value, project(grid, grad)

    # -- vector interface used by the optimizer ------------------------------
    def value_vector(self, v) -> float:
        return self.objective(self._full(v))

    def value_and_grad_vector(self, v):
        U = self._full(v)
        val, g = self.objective_and_gradient(U)
        return val, np.ascontiguousarray(self.reduce(g)).view(float).ravel()

    def _full(self, v):
        free = np.asarray(v, dtype=float).view(complex).reshape((self.free_count(),) + self.grid.shape)
        return self.expand(free)

    def scale(self, path: Path) -> float:
        return max(1.0, h_norm2(path.nodes[0]))

    def random_direction(self, rng) -> np.ndarray:
        """A random admissible perturbation in vector coordinates."""
        raw = rng.standard_normal((self.free_count(),) + self.grid.shape)
        c = project(self.grid, from_physical(self.grid, raw))
        return np.ascontiguousarray(c).view(float).ravel()

    def precondition(self, v) -> np.ndarray:
        """Apply the inverse Hessian of the Stokes part of the gap form, mode by mode."""
        if self._precond is None:
            self._precond = self._build_preconditioner()
        blocks, cols = self._precond
        G = np.asarray(v, dtype=float).view(complex).reshape(self.free_count(), -1)
        out = G.copy()
        for inv, c in zip(blocks, cols):
            out[:, c] = inv @ G[:, c]
        return out.view(float).ravel()

    def _build_preconditioner(self):
        grid, N, dt, nu = self.grid, self.N, self.dt, self.grid.nu
        M = np.zeros((N, N + 1))
        Dm = np.zeros((N, N + 1))
        idx = np.arange(N)
        M[idx, idx] = M[idx, idx + 1] = 0.5
        Dm[idx, idx] = -1.0 / dt
        Dm[idx, idx + 1] = 1.0 / dt
        k2 = np.broadcast_to(grid.k2, grid.shape).ravel()
        mask = np.broadcast_to(grid.mask, grid.shape).ravel()
        if self.structural is not None:
            E = np.zeros((N + 1, N))
            E[idx, idx] = 1.0
            E[N, 0] = self.structural
        else:
            E = np.eye(N + 1)
        alpha = self.boundary.curvature
        blocks, cols = [], []
        for kappa in grid.distinct_k2:
            a = nu * kappa
            H = dt * (a * M.T @ M + (Dm.T @ Dm) / a)
            if alpha is not None:
                ea = np.zeros(N + 1)
                eb = np.zeros(N + 1)
                ea[0], ea[-1] = 1.0, -1.0
                eb[0], eb[-1] = 0.5, 0.5
                H = H + alpha * np.outer(ea, ea) + np.outer(eb, eb) / alpha
            H = E.T @ H @ E
            blocks.append(np.linalg.inv(H))
            cols.append(np.flatnonzero(mask & (k2 == kappa)))
        return blocks, cols

    # -- reporting -------------------------------------------------------------
    def integrand(self, path: Path) -> np.ndarray:
        """``Phi_i(m_i) + Phi_i*(-D_i - Lambda m_i)`` evaluated directly."""
        m, D, lam = self._pieces(path.nodes)
        q = -D - lam
        return np.array([p.value(m[i]) + p.conjugate(q[i]) for i, p in enumerate(self.potentials)])

    def pde_residuals(self, path: Path) -> np.ndarray:
        """X*-norm of ``D_i + Lambda m_i + dPhi_i(m_i)`` on each interval."""
        m, D, lam = self._pieces(path.nodes)
        out = np.empty(self.N)
        for i, p in enumerate(self.potentials):
            out[i] = math.sqrt(xstar_norm2(self.grid, D[i] + lam[i] + p.subgradient(m[i])))
        return out

    def report(self, path: Path) -> FunctionalReport:
        self._check_path(path)
        U = path.nodes
        m, D, lam = self._pieces(U)
        gaps, _ = self._gaps(U, m, D, lam)
        integrand = self.integrand(path)
        a = U[0] - U[-1]
        b = 0.5 * (U[0] + U[-1])
        bval = boundary_value(self.boundary, a, b)
        bgap = self._boundary_gap(U) if self.structural is None else (0.0 if math.isfinite(bval) else math.inf)
        skew = float(self.dt * sum(inner(lam[i], m[i]) for i in range(self.N)))
        pres = self.pde_residuals(path)
        return FunctionalReport(
            total=float(np.dot(self.weights, integrand) + bval),
            integrand=integrand,
            gaps=gaps,
            boundary=float(bval),
            boundary_gap=float(bgap),
            skew=skew,
            gap_total=float(np.dot(self.weights, gaps) + bgap),
            energy_residual=energy_identity_residual(self, path, integrand=integrand),
            pde_residual=float(pres.max()),
            boundary_residual=boundary_residual(self.boundary, U[0], U[-1]),
            pde_residuals=pres,
        )


def functional_value(F: DiscreteFunctional, path: Path) -> FunctionalReport:
    return F.report(path)


def functional_gradient(F: DiscreteFunctional, path: Path) -> np.ndarray:
    """Gradient of the functional with respect to every node's coefficients."""
    F._check_path(path)
    if not F.boundary.smooth:
        raise UnsupportedOperation(
            f"{F.boundary.kind} boundary is non-smooth; differentiate the structural parameterization instead"
        )
    return F.objective_and_gradient(path.nodes)[1]


def energy_identity_residual(F: DiscreteFunctional, path: Path, integrand=None) -> float:
    """``max_t | |u_t|^2 + 2 sum_{i<t} dt [Phi + Phi*]_i - |u_0|^2 |``."""
    if integrand is None:
        integrand = F.integrand(path)
    norms = path.h_norms()
    acc = np.concatenate([[0.0], np.cumsum(F.weights * integrand)])
    return float(np.max(np.abs(norms + 2 * acc - norms[0])))


def energy_inequality_check(F: DiscreteFunctional, path: Path, integrand=None) -> float:
    """``|u_N|^2/2 + sum dt [Phi + Phi*] - |u_0|^2/2``; nonpositive when the inequality holds."""
    if integrand is None:
        integrand = F.integrand(path)
    norms = path.h_norms()
    return float(0.5 * norms[-1] + np.dot(F.weights, integrand) - 0.5 * norms[0])


@dataclass
class StationaryReport:
    total: float
    gap: float
    skew: float
    pde_residual: float

    def to_dict(self) -> dict:
        return {"total": self.total, "gap_total": self.gap, "skew_term": self.skew, "pde_residual": self.pde_residual}


class StationaryFunctional:
    """``I(u) = Phi(u) + Phi*(-Lambda u) + <Lambda u, u>`` for steady forcing ``f``.

    Its value equals ``(1/2 nu) |Lambda u + nu J u + f|_{X*}^2`` and vanishes
    exactly at steady solutions.
    """

    def __init__(self, grid: TorusGrid, forcing=None):
        self.grid = grid
        f = grid.zeros() if forcing is None else np.asarray(getattr(forcing, "coefficients", forcing))
        self.forcing = project(grid, f)
        self.phi = QuadraticForm(np.broadcast_to(grid.k2, grid.shape), linear=self.forcing, scale=grid.nu)

    def residual(self, u) -> np.ndarray:
        u = np.asarray(getattr(u, "coefficients", u))
        return advect(self.grid, u) + self.grid.nu * self.grid.k2 * u + self.forcing

    def report(self, u) -> StationaryReport:
        u = np.asarray(getattr(u, "coefficients", u))
        lam = advect(self.grid, u)
        total = self.phi.value(u) + self.phi.conjugate(-lam) + inner(lam, u)
        r = self.residual(u)
        return StationaryReport(
            total=float(total),
            gap=float(xstar_norm2(self.grid, r) / (2 * self.grid.nu)),
            skew=inner(lam, u),
            pde_residual=math.sqrt(xstar_norm2(self.grid, r)),
        )

    def value_and_grad(self, u):
        g = self.grid
        r = self.residual(u)
        w = g.inv_k2 * r / g.nu
        grad = r + advect_adjoint(g, u, w)
        return float(xstar_norm2(g, r) / (2 * g.nu)), project(g, grad)

    def to_vector(self, u) -> np.ndarray:
        u = np.asarray(getattr(u, "coefficients", u), dtype=complex)
        return np.ascontiguousarray(u).view(float).ravel().copy()

    def from_vector(self, v) -> SpectralField:
        return SpectralField(self.grid, np.asarray(v, dtype=float).view(complex).reshape(self.grid.shape))

    def value_vector(self, v) -> float:
        u = np.asarray(v, dtype=float).view(complex).reshape(self.grid.shape)
        return float(xstar_norm2(self.grid, self.residual(u)) / (2 * self.grid.nu))

    def value_and_grad_vector(self, v):
        u = np.asarray(v, dtype=float).view(complex).reshape(self.grid.shape)
        val, g = self.value_and_grad(u)
        return val, np.ascontiguousarray(g).view(float).ravel()

    def precondition(self, v) -> np.ndarray:
        g = self.grid
        G = np.asarray(v, dtype=float).view(complex).reshape(g.shape)
        return (G * g.inv_k2 / g.nu).view(float).ravel()

    def scale(self, u) -> float:
        return max(1.0, h_norm2(getattr(u, "coefficients", u)))

    def random_direction(self, rng) -> np.ndarray:
        c = project(self.grid, from_physical(self.grid, rng.standard_normal(self.grid.shape)))
        return np.ascontiguousarray(c).view(float).ravel()


def stationary_functional(grid: TorusGrid, f, u) -> StationaryReport:
    return StationaryFunctional(grid, f).report(u)
