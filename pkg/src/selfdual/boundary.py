"""Boundary Lagrangians ``l(a, b) = psi(a) + psi*(-b)`` encoding temporal boundary conditions.

The endpoint pair ``(u0, uT)`` enters as ``a = u0 - uT`` and ``b = (u0 + uT)/2``;
the condition realized at a minimizer is ``-(u0 + uT)/2 in d psi(u0 - uT)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .convex import ConvexPotential, Indicator, QuadraticForm, ScaledSquare, _sqnorm
from .errors import DomainWarning, InvalidArgument

__all__ = [
    "BoundaryLagrangian",
    "make_boundary",
    "boundary_value",
    "boundary_residual",
    "alpha_from_lambda",
    "lambda_from_alpha",
    "KINDS",
]

KINDS = ("initial_value", "periodic", "anti_periodic", "alpha_periodic")


def alpha_from_lambda(lam: float) -> float:
    """``alpha = (lam - 1) / (lam + 1)``."""
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    # algebraically (lam - 1)/(lam + 1); this form rounds exactly at lam = 1/3, 1, 3
    return 1.0 - 2.0 / (lam + 1.0)


def lambda_from_alpha(alpha: float) -> float:
    """Inverse map ``lam = (1 + alpha) / (1 - alpha)``, requiring ``|alpha| < 1``."""
    if not abs(alpha) < 1:
        raise InvalidArgument("alpha must satisfy |alpha| < 1")
    return (1.0 + alpha) / (1.0 - alpha)


@dataclass(frozen=True)
class BoundaryLagrangian:
    kind: str
    psi: ConvexPotential
    x0: np.ndarray | None = None
    lam: float | None = None

    @property
    def smooth(self) -> bool:
        """Whether ``psi`` and ``psi*`` are both finite quadratics."""
        return self.kind in ("initial_value", "alpha_periodic")

    @property
    def curvature(self) -> float | None:
        """Hessian multiple of ``psi`` (``psi*`` then has curvature ``1/curvature``)."""
        if self.kind == "initial_value":
            return 0.5
        if self.kind == "alpha_periodic":
            return 0.5 * self.lam
        return None

    @property
    def endpoint_sign(self) -> int | None:
        """``s`` with ``u(T) = s u(0)`` imposed structurally, for the non-smooth kinds."""
        return {"periodic": 1, "anti_periodic": -1}.get(self.kind)

    @property
    def alpha(self) -> float | None:
        return alpha_from_lambda(self.lam) if self.kind == "alpha_periodic" else None

    def value(self, a, b) -> float:
        return boundary_value(self, a, b)

    def residual(self, u0, uT) -> float:
        return boundary_residual(self, u0, uT)

    def gradient(self, a, b):
        """``(d psi(a), -d psi*(-b))`` for smooth kinds."""
        if not self.smooth:
            raise InvalidArgument(f"{self.kind} boundary has no gradient; impose it structurally")
        return self.psi.subgradient(a), -self.psi.conjugate_gradient(-b)

    def warn_if_not_coercive(self, d: int) -> None:
        if d == 3 and self.kind == "anti_periodic":
            warnings.warn(
                "anti-periodic boundary is not coercive in both variables; "
                "the 3D energy inequality is not guaranteed",
                DomainWarning,
                stacklevel=2,
            )


def make_boundary(kind: str, x0=None, lam: float | None = None, alpha: float | None = None) -> BoundaryLagrangian:
    """Catalog constructor.

    ``alpha_periodic`` takes either ``lam > 0`` or ``alpha`` with ``|alpha| < 1``.
    """
    if kind == "initial_value":
        if x0 is None:
            raise InvalidArgument("initial_value boundary needs x0")
        x0 = np.asarray(x0)
        # psi(x) = |x|^2 / 4 - <x, x0>, psi*(c) = |c + x0|^2
        return BoundaryLagrangian(kind, QuadraticForm(1.0, linear=-x0, scale=0.5), x0=x0)
    if kind == "periodic":
        return BoundaryLagrangian(kind, Indicator(0.0))
    if kind == "anti_periodic":
        return BoundaryLagrangian(kind, ScaledSquare(0.0))
    if kind == "alpha_periodic":
        if lam is None:
            if alpha is None:
                raise InvalidArgument("alpha_periodic needs lam or alpha")
            lam = lambda_from_alpha(alpha)
        if not lam > 0:
            raise InvalidArgument("lambda must be positive")
        return BoundaryLagrangian(kind, ScaledSquare(float(lam)), lam=float(lam))
    raise InvalidArgument(f"unknown boundary kind {kind!r}; expected one of {KINDS}")


def boundary_value(bl: BoundaryLagrangian, a, b) -> float:
    """``psi(a) + psi*(-b)`` on the extended reals."""
    a = np.asarray(a)
    b = np.asarray(b)
    first = bl.psi.value(a)
    if math.isinf(first):
        return first
    return first + bl.psi.conjugate(-b)


def boundary_residual(bl: BoundaryLagrangian, u0, uT) -> float:
    """H-norm defect of the boundary condition; zero exactly when it holds."""
    u0 = np.asarray(u0)
    uT = np.asarray(uT)
    if bl.kind == "periodic":
        return math.sqrt(_sqnorm(u0 - uT))
    if bl.kind == "anti_periodic":
        return math.sqrt(_sqnorm(u0 + uT))
    r = 0.5 * (u0 + uT) + bl.psi.subgradient(u0 - uT)
    return math.sqrt(_sqnorm(r))
