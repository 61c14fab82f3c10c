"""Convex potentials with values, subgradients and Legendre-Fenchel conjugates.

Vectors are numpy arrays (real or complex).  The duality pairing is the real
part of the flat Hermitian product, ``<x, p> = Re sum(conj(x) * p)``, which is
the H inner product when the arrays are Fourier coefficients of real fields.

Extended reals are plain floats: ``math.inf`` is the value off the effective
domain.  Every conjugate below is closed form except for
:class:`TabulatedConvex`, whose conjugate is the exact discrete supremum over
its sample grid.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DimensionError, InvalidArgument, UnsupportedOperation

__all__ = [
    "ConvexPotential",
    "QuadraticForm",
    "ScaledSquare",
    "PowerNorm",
    "Indicator",
    "QuarticNorm",
    "TabulatedConvex",
    "pairing",
    "potential_value",
    "conjugate_value",
    "subgradient",
    "fenchel_gap",
    "discrete_legendre",
    "lower_hull",
]

KERNEL_ATOL = 1e-12


def pairing(x, p) -> float:
    """Real duality pairing of two arrays of the same size."""
    x = np.asarray(x)
    p = np.asarray(p)
    if x.size != p.size and x.size != 1 and p.size != 1:
        raise DimensionError(f"pairing of sizes {x.size} and {p.size}")
    if x.size == 1 or p.size == 1:
        return float(np.sum(np.conj(x) * p).real)
    return float(np.vdot(x, p).real)


def _abs2(x):
    if np.iscomplexobj(x):
        return x.real ** 2 + x.imag ** 2
    return x * x


def _sqnorm(x) -> float:
    return float(np.sum(_abs2(np.asarray(x))))


def _as_vector(x):
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.number):
        raise InvalidArgument("potential arguments must be numeric arrays")
    return x


class ConvexPotential:
    """A proper convex lower semicontinuous function on a vector space.

    Subclasses provide ``value``, ``conjugate`` and, where the function is
    differentiable, ``subgradient`` and ``conjugate_gradient``.  Instances are
    immutable and safe to share.
    """

    def value(self, x) -> float:
        raise NotImplementedError

    def conjugate(self, p) -> float:
        raise NotImplementedError

    def subgradient(self, x):
        raise UnsupportedOperation(f"{type(self).__name__} has no single-valued subgradient")

    def conjugate_gradient(self, p):
        raise UnsupportedOperation(f"{type(self).__name__} conjugate is not differentiable")

    def fenchel_gap(self, x, p) -> float:
        v = self.value(x)
        c = self.conjugate(p)
        if math.isinf(v) or math.isinf(c):
            return math.inf
        return v + c - pairing(x, p)

    def __call__(self, x) -> float:
        return self.value(x)


class QuadraticForm(ConvexPotential):
    """``(scale/2) <A x, x> + <linear, x>`` with ``A`` a nonnegative diagonal multiplier.

    ``operator`` is a scalar or an array broadcastable against the argument;
    zero entries form the kernel of ``A``, on which the conjugate is finite only
    when ``p - linear`` vanishes.
    """

    def __init__(self, operator=1.0, linear=None, scale=1.0):
        op = np.asarray(operator, dtype=float)
        if np.any(op < 0) or not np.all(np.isfinite(op)):
            raise InvalidArgument("QuadraticForm operator must be finite and nonnegative")
        if not scale > 0:
            raise InvalidArgument("QuadraticForm scale must be positive")
        self.operator = op
        self.linear = None if linear is None else np.asarray(linear)
        self.scale = float(scale)
        self._support = op > 0
        self._inverse = np.where(self._support, 1.0 / np.where(self._support, op, 1.0), 0.0)

    def _check(self, x):
        x = _as_vector(x)
        if self.linear is not None and self.linear.shape != x.shape:
            raise DimensionError(f"argument shape {x.shape} != linear term shape {self.linear.shape}")
        try:
            np.broadcast_shapes(self.operator.shape, x.shape)
        except ValueError as exc:
            raise DimensionError(str(exc)) from None
        return x

    def _shifted(self, p):
        p = self._check(p)
        return p if self.linear is None else p - self.linear

    def _kernel_ok(self, r) -> bool:
        if np.all(self._support):
            return True
        off = np.broadcast_to(~self._support, r.shape)
        return not np.any(np.abs(r[off]) > KERNEL_ATOL)

    def value(self, x) -> float:
        x = self._check(x)
        v = 0.5 * self.scale * float(np.sum(self.operator * _abs2(x)))
        if self.linear is not None:
            v += pairing(self.linear, x)
        return v

    def conjugate(self, p) -> float:
        r = self._shifted(p)
        if not self._kernel_ok(r):
            return math.inf
        return float(np.sum(self._inverse * _abs2(r))) / (2.0 * self.scale)

    def subgradient(self, x):
        x = self._check(x)
        g = self.scale * self.operator * x
        return g if self.linear is None else g + self.linear

    def conjugate_gradient(self, p):
        r = self._shifted(p)
        if not self._kernel_ok(r):
            raise InvalidArgument("conjugate is infinite: p - linear has a kernel component")
        return self._inverse * r / self.scale

    def norm2(self, x) -> float:
        """``<A x, x>``, the squared seminorm induced by the operator."""
        return float(np.sum(self.operator * _abs2(np.asarray(x))))

    def dual_norm2(self, r) -> float:
        return float(np.sum(self._inverse * _abs2(np.asarray(r))))

    def fenchel_gap(self, x, p) -> float:
        # (1/2s) ||p - grad phi(x)||^2_{A^-1}: no cancellation near the equality case
        r = self._shifted(p)
        if not self._kernel_ok(r):
            return math.inf
        x = self._check(x)
        e = r - self.scale * self.operator * x
        return float(np.sum(self._inverse * _abs2(e))) / (2.0 * self.scale)


class ScaledSquare(ConvexPotential):
    """``(coefficient/4) ||x||^2``; the zero coefficient gives the zero function."""

    def __init__(self, coefficient):
        if coefficient < 0:
            raise InvalidArgument("ScaledSquare coefficient must be >= 0")
        self.coefficient = float(coefficient)

    def value(self, x) -> float:
        return 0.25 * self.coefficient * _sqnorm(_as_vector(x))

    def conjugate(self, p) -> float:
        p = _as_vector(p)
        if self.coefficient == 0.0:
            return 0.0 if not np.any(p) else math.inf
        return _sqnorm(p) / self.coefficient

    def subgradient(self, x):
        return 0.5 * self.coefficient * _as_vector(x)

    def conjugate_gradient(self, p):
        if self.coefficient == 0.0:
            raise UnsupportedOperation("conjugate of the zero function is an indicator")
        return 2.0 * _as_vector(p) / self.coefficient

    def fenchel_gap(self, x, p) -> float:
        if self.coefficient == 0.0:
            return 0.0 if not np.any(_as_vector(p)) else math.inf
        e = _as_vector(p) - self.subgradient(x)
        return _sqnorm(e) / self.coefficient


class PowerNorm(ConvexPotential):
    """``(coefficient/p) ||x||^p`` for an exponent ``p > 1``."""

    def __init__(self, exponent, coefficient=1.0):
        if not exponent > 1:
            raise InvalidArgument("PowerNorm exponent must exceed 1")
        if not coefficient > 0:
            raise InvalidArgument("PowerNorm coefficient must be positive")
        self.exponent = float(exponent)
        self.coefficient = float(coefficient)
        self.conjugate_exponent = self.exponent / (self.exponent - 1.0)

    def value(self, x) -> float:
        return self.coefficient * math.sqrt(_sqnorm(_as_vector(x))) ** self.exponent / self.exponent

    def conjugate(self, p) -> float:
        q = self.conjugate_exponent
        r = math.sqrt(_sqnorm(_as_vector(p)))
        return self.coefficient ** (1.0 - q) * r ** q / q

    def subgradient(self, x):
        x = _as_vector(x)
        r = math.sqrt(_sqnorm(x))
        if r == 0.0:
            return np.zeros_like(x, dtype=np.result_type(x, float))
        return self.coefficient * r ** (self.exponent - 2.0) * x

    def conjugate_gradient(self, p):
        p = _as_vector(p)
        q = self.conjugate_exponent
        r = math.sqrt(_sqnorm(p))
        if r == 0.0:
            return np.zeros_like(p, dtype=np.result_type(p, float))
        return self.coefficient ** (1.0 - q) * r ** (q - 2.0) * p


class Indicator(ConvexPotential):
    """0 at ``point`` and +inf elsewhere; the conjugate is ``p -> <p, point>``."""

    def __init__(self, point=0.0, atol=0.0):
        self.point = np.asarray(point)
        self.atol = float(atol)

    def value(self, x) -> float:
        x = _as_vector(x)
        try:
            np.broadcast_shapes(self.point.shape, x.shape)
        except ValueError as exc:
            raise DimensionError(str(exc)) from None
        return 0.0 if np.all(np.abs(x - self.point) <= self.atol) else math.inf

    def conjugate(self, p) -> float:
        p = _as_vector(p)
        if not np.any(self.point):
            return 0.0
        return pairing(np.broadcast_to(self.point, p.shape), p)

    def subgradient(self, x):
        raise UnsupportedOperation("indicator subdifferential is set-valued; use the conjugate form")


def _cubic_root(scale, eps, t):
    """Positive root ``s`` of ``scale*s + eps*s**3 = t`` for ``t >= 0``."""
    if t == 0.0:
        return 0.0
    if eps == 0.0:
        return t / scale
    a = t / (2.0 * eps)
    b = (scale / (3.0 * eps)) ** 3
    s = np.cbrt(a + math.sqrt(a * a + b)) + np.cbrt(a - math.sqrt(a * a + b))
    s = max(float(s), 0.0)
    # Cardano loses digits when eps is small; polish with Newton on the monotone cubic
    s = min(s, t / scale) if s > 0 else t / scale
    for _ in range(50):
        f = scale * s + eps * s ** 3 - t
        step = f / (scale + 3.0 * eps * s * s)
        s -= step
        if abs(step) <= 1e-16 * max(s, 1e-300):
            break
    return s


class QuarticNorm(ConvexPotential):
    """``base(x) + (epsilon/4) <A x, x>^2`` for a :class:`QuadraticForm` base.

    With ``g(s) = (scale/2) s^2 + (epsilon/4) s^4`` the function is
    ``g(||x||_A) + <linear, x>``, so the conjugate is ``g*(||p - linear||_{A^-1})``
    where ``g*`` needs the positive root of ``scale*s + epsilon*s^3 = t``.
    """

    def __init__(self, epsilon, base: QuadraticForm):
        if epsilon < 0:
            raise InvalidArgument("QuarticNorm epsilon must be >= 0")
        self.epsilon = float(epsilon)
        self.base = base

    def _g(self, s):
        return 0.5 * self.base.scale * s * s + 0.25 * self.epsilon * s ** 4

    def value(self, x) -> float:
        a2 = self.base.norm2(self.base._check(x))
        return self.base.value(x) + 0.25 * self.epsilon * a2 * a2

    def _dual_radius(self, p):
        r = self.base._shifted(p)
        if not self.base._kernel_ok(r):
            return r, math.inf
        return r, math.sqrt(self.base.dual_norm2(r))

    def conjugate(self, p) -> float:
        _, t = self._dual_radius(p)
        if math.isinf(t):
            return math.inf
        s = _cubic_root(self.base.scale, self.epsilon, t)
        return t * s - self._g(s)

    def subgradient(self, x):
        x = self.base._check(x)
        a2 = self.base.norm2(x)
        g = (self.base.scale + self.epsilon * a2) * self.base.operator * x
        return g if self.base.linear is None else g + self.base.linear

    def conjugate_gradient(self, p):
        r, t = self._dual_radius(p)
        if math.isinf(t):
            raise InvalidArgument("conjugate is infinite: p - linear has a kernel component")
        s = _cubic_root(self.base.scale, self.epsilon, t)
        return self.base._inverse * r / (self.base.scale + self.epsilon * s * s)

    def fenchel_gap(self, x, p) -> float:
        # Bregman divergence of g plus a Cauchy-Schwarz defect, both nonnegative
        r, t = self._dual_radius(p)
        if math.isinf(t):
            return math.inf
        x = self.base._check(x)
        a = math.sqrt(self.base.norm2(x))
        rho = _cubic_root(self.base.scale, self.epsilon, t)
        d = a - rho
        bregman = 0.5 * self.base.scale * d * d + 0.25 * self.epsilon * d * d * (a * a + 2 * a * rho + 3 * rho * rho)
        if a == 0.0 or t == 0.0:
            return bregman
        root = np.sqrt(self.base.operator)
        inv_root = np.sqrt(self.base._inverse)
        diff = root * x / a - inv_root * r / t
        return bregman + 0.5 * a * t * _sqnorm(diff)


def lower_hull(x, y):
    """Indices of the lower convex hull of points sorted by ``x`` (monotone chain)."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (x[i1] - x[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (x[i] - x[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def legendre_hull(x, y):
    """Lower-hull vertices and their slopes, the reusable part of :func:`discrete_legendre`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size == 0:
        raise InvalidArgument("no finite samples")
    idx = lower_hull(x, y)
    hx, hy = x[idx], y[idx]
    return hx, hy, np.diff(hy) / np.diff(hx)


def legendre_eval(hull, s):
    hx, hy, slopes = hull
    s = np.asarray(s, dtype=float)
    if len(hx) == 1:
        return s * hx[0] - hy[0]
    j = np.searchsorted(slopes, s, side="left")
    return s * hx[j] - hy[j]


def discrete_legendre(x, y, s):
    """``max_j s*x_j - y_j`` for every slope in ``s``.

    Only lower-hull vertices can be maximizers, and hull slopes increase, so
    each query is a binary search: O(n) hull plus O(m log n) queries.
    Samples with infinite values are ignored.
    """
    return legendre_eval(legendre_hull(x, y), s)


class TabulatedConvex(ConvexPotential):
    """A convex function known by samples on a 1D or 2D tensor grid.

    Values off the grid use linear (1D) or bilinear (2D) interpolation and are
    +inf outside the grid box.  The conjugate is the exact discrete supremum
    over the samples.  Non-convex data is accepted; its conjugate is that of
    the convex hull and :attr:`warning` says so.
    """

    def __init__(self, grids, values, tol=1e-12):
        if isinstance(grids, np.ndarray) and grids.ndim == 1:
            grids = (grids,)
        self.grids = tuple(np.asarray(g, dtype=float) for g in grids)
        self.values = np.asarray(values, dtype=float)
        self.dim = len(self.grids)
        if self.dim not in (1, 2):
            raise InvalidArgument("TabulatedConvex supports 1D and 2D grids only")
        if self.values.shape != tuple(len(g) for g in self.grids):
            raise DimensionError("values shape does not match the grid")
        for g in self.grids:
            if len(g) < 2 or np.any(np.diff(g) <= 0):
                raise InvalidArgument("grid axes must be strictly increasing with >= 2 points")
        self._tol = tol
        self._convex = None
        self._row_hulls = None

    @property
    def convex(self) -> bool:
        """Whether the samples are convex; computed on first use."""
        if self._convex is None:
            self._convex = self._check_convex(self._tol)
        return self._convex

    @property
    def warning(self) -> str | None:
        return None if self.convex else "non-convex samples: conjugate is that of the convex hull"

    def _check_convex(self, tol) -> bool:
        if self.dim == 1:
            x, y = self.grids[0], self.values
            idx = lower_hull(x, y)
            env = np.interp(x, x[idx], y[idx])
            return bool(np.all(y - env <= tol * max(1.0, np.max(np.abs(y)))))
        x1, x2 = np.meshgrid(*self.grids, indexing="ij")
        pts = np.column_stack([x1.ravel(), x2.ravel(), self.values.ravel()])
        pts = pts[np.isfinite(pts[:, 2])]
        try:
            hull = ConvexHull(pts)
        except QhullError:
            return True  # coplanar samples: affine data
        eq = hull.equations[hull.equations[:, 2] < -1e-14]
        env = np.max(-(eq[:, :1] * pts[:, 0] + eq[:, 1:2] * pts[:, 1] + eq[:, 3:4]) / eq[:, 2:3], axis=0)
        return bool(np.all(pts[:, 2] - env <= tol * max(1.0, np.max(np.abs(pts[:, 2])))))

    def _point(self, x):
        x = np.atleast_1d(_as_vector(x)).astype(float).ravel()
        if x.size != self.dim:
            raise DimensionError(f"expected a {self.dim}-vector, got size {x.size}")
        return x

    def _inside(self, x) -> bool:
        return all(g[0] <= xi <= g[-1] for g, xi in zip(self.grids, x))

    def value(self, x) -> float:
        x = self._point(x)
        if not self._inside(x):
            return math.inf
        if self.dim == 1:
            return float(np.interp(x[0], self.grids[0], self.values))
        g1, g2 = self.grids
        i = min(np.searchsorted(g1, x[0], side="right") - 1, len(g1) - 2)
        j = min(np.searchsorted(g2, x[1], side="right") - 1, len(g2) - 2)
        tx = (x[0] - g1[i]) / (g1[i + 1] - g1[i])
        ty = (x[1] - g2[j]) / (g2[j + 1] - g2[j])
        v = self.values
        return float((1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i + 1, j]
                     + (1 - tx) * ty * v[i, j + 1] + tx * ty * v[i + 1, j + 1])

    def conjugate_many(self, ps):
        """Discrete conjugate at an array of dual points, shape ``(m,)`` or ``(m, 2)``."""
        ps = np.asarray(ps, dtype=float)
        if self.dim == 1:
            return discrete_legendre(self.grids[0], self.values, ps.reshape(-1))
        ps = ps.reshape(-1, 2)
        g1, g2 = self.grids
        if self._row_hulls is None:
            self._row_hulls = [legendre_hull(g2, row) if np.any(np.isfinite(row)) else None for row in self.values]
        inner = np.stack([legendre_eval(h, ps[:, 1]) if h is not None else np.full(len(ps), -np.inf)
                          for h in self._row_hulls])
        # sup_x1 [p1 x1 - (-inner(x1, p2))]: a 1D transform per query column
        return np.array([discrete_legendre(g1, -inner[:, m], ps[m, 0]) for m in range(len(ps))])

    def conjugate(self, p) -> float:
        p = self._point(p)
        return float(self.conjugate_many(p[None, :] if self.dim == 2 else p)[0])

    def conjugate_table(self, dual_grids) -> "TabulatedConvex":
        """Conjugate sampled on a dual grid, as a new tabulated potential."""
        if isinstance(dual_grids, np.ndarray) and dual_grids.ndim == 1:
            dual_grids = (dual_grids,)
        if self.dim == 1:
            return TabulatedConvex(dual_grids, self.conjugate_many(dual_grids[0]))
        q1, q2 = np.meshgrid(*dual_grids, indexing="ij")
        vals = self.conjugate_many(np.column_stack([q1.ravel(), q2.ravel()]))
        return TabulatedConvex(dual_grids, vals.reshape(q1.shape))

    def subgradient(self, x):
        x = self._point(x)
        if not self._inside(x):
            raise InvalidArgument("point outside the tabulated domain")
        if self.dim == 1:
            g = self.grids[0]
            slopes = np.diff(self.values) / np.diff(g)
            k = np.searchsorted(g, x[0])
            if k < len(g) and g[k] == x[0]:
                left = slopes[k - 1] if k > 0 else slopes[0]
                right = slopes[k] if k < len(slopes) else slopes[-1]
                return np.array([0.5 * (left + right)])
            return np.array([slopes[min(max(k - 1, 0), len(slopes) - 1)]])
        h = 1e-7 * max(1.0, float(np.max(np.abs(x))))
        out = np.empty(2)
        for a in range(2):
            e = np.zeros(2)
            e[a] = h
            lo, hi = self.grids[a][0], self.grids[a][-1]
            xp = np.minimum(x + e, np.where(np.arange(2) == a, hi, np.inf))
            xm = np.maximum(x - e, np.where(np.arange(2) == a, lo, -np.inf))
            out[a] = (self.value(xp) - self.value(xm)) / (xp[a] - xm[a])
        return out


def potential_value(phi: ConvexPotential, x) -> float:
    return phi.value(x)


def conjugate_value(phi: ConvexPotential, p) -> float:
    return phi.conjugate(p)


def subgradient(phi: ConvexPotential, x):
    return phi.subgradient(x)


def fenchel_gap(phi: ConvexPotential, x, p) -> float:
    """``phi(x) + phi*(p) - <x, p>``, nonnegative by the Fenchel-Young inequality."""
    return phi.fenchel_gap(x, p)
