"""Anti-selfdual Lagrangians on ``X x X*`` for finite-dimensional ``X``.

Three evaluation routes exist:

* potential kinds (:class:`Potential`, :class:`SkewPotential`) evaluate through
  the closed forms of their convex potential;
* :class:`QuadraticLagrangian` holds ``1/2 z.Q z + c.z + e`` in ``z = (x, p)``;
  conjugates, Hamiltonians, oplus and lambda-regularizations of quadratics
  are again quadratics obtained by Schur complements;
* the tabulated family (:class:`TabulatedLagrangian` and the lazy
  :class:`GridOplus` / :class:`GridRegularized`) works on 1D grids with brute
  force infima, smallest index first on ties.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.optimize import minimize_scalar

from .convex import ConvexPotential, QuadraticForm, ScaledSquare, TabulatedConvex, pairing
from .errors import DimensionError, DomainWarning, InvalidArgument, UnsupportedOperation

__all__ = [
    "ASDLagrangian",
    "Potential",
    "SkewPotential",
    "QuadraticLagrangian",
    "TabulatedLagrangian",
    "GridOplus",
    "GridRegularized",
    "as_quadratic",
    "lagrangian_value",
    "hamiltonian",
    "derived_field",
    "oplus",
    "regularize",
    "selfduality_residual",
]

VARIANTS = ("first", "second", "both")


def _vec(x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise InvalidArgument("Lagrangian arguments must be finite")
    return x.ravel()


def _sub_inf(a, b):
    # a - b on extended reals; the undefined inf - inf is -inf (concave convention)
    if math.isinf(a) and math.isinf(b) and (a > 0) == (b > 0):
        return -math.inf
    return a - b


class ASDLagrangian:
    """Base class; ``value(x, p)`` is ``L(x, p)`` and ``conjugate(q, y)`` is ``L*(q, y)``."""

    dim: int | None = None

    def value(self, x, p) -> float:
        raise NotImplementedError

    def conjugate(self, q, y) -> float:
        raise UnsupportedOperation(f"{type(self).__name__} has no conjugate route")

    def hamiltonian(self, x, y) -> float:
        raise UnsupportedOperation(f"{type(self).__name__} has no Hamiltonian route")

    def derived_field(self, x):
        raise UnsupportedOperation(f"{type(self).__name__} derived field is not single-valued")

    def __call__(self, x, p) -> float:
        return self.value(x, p)

    def _check(self, *vs):
        out = [_vec(v) for v in vs]
        n = self.dim if self.dim is not None else out[0].size
        if any(v.size != n for v in out):
            raise DimensionError(f"expected vectors of size {n}, got {[v.size for v in out]}")
        return out


class Potential(ASDLagrangian):
    """``L(x, p) = phi(x) + phi*(-p)``; its derived field is the subdifferential of phi."""

    def __init__(self, phi: ConvexPotential, dim: int | None = None):
        self.phi = phi
        self.dim = dim

    def value(self, x, p) -> float:
        x, p = self._check(x, p)
        a = self.phi.value(x)
        return a if math.isinf(a) else a + self.phi.conjugate(-p)

    def conjugate(self, q, y) -> float:
        q, y = self._check(q, y)
        a = self.phi.conjugate(q)
        return a if math.isinf(a) else a + self.phi.value(-y)

    def hamiltonian(self, x, y) -> float:
        x, y = self._check(x, y)
        a, b = self.phi.value(-y), self.phi.value(x)
        if math.isinf(b):
            warnings.warn("Hamiltonian evaluated outside Dom_1(L): returning -inf", DomainWarning, stacklevel=2)
            return -math.inf
        return a - b

    def derived_field(self, x):
        (x,) = self._check(x)
        return np.asarray(self.phi.subgradient(x), dtype=float).ravel()


class SkewPotential(ASDLagrangian):
    """``L(x, p) = phi(x) + phi*(-Gx - p)`` for a matrix ``G``.

    The conjugate uses the transpose of ``G``, so it reproduces ``L(-y, -q)``
    only when ``G`` is skew: the selfduality residual detects non-skew input.
    """

    def __init__(self, phi: ConvexPotential, gamma):
        self.phi = phi
        self.gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
        if self.gamma.shape[0] != self.gamma.shape[1]:
            raise DimensionError("gamma must be square")
        self.dim = self.gamma.shape[0]

    def value(self, x, p) -> float:
        x, p = self._check(x, p)
        a = self.phi.value(x)
        return a if math.isinf(a) else a + self.phi.conjugate(-self.gamma @ x - p)

    def conjugate(self, q, y) -> float:
        q, y = self._check(q, y)
        a = self.phi.conjugate(q - self.gamma.T @ y)
        return a if math.isinf(a) else a + self.phi.value(-y)

    def hamiltonian(self, x, y) -> float:
        x, y = self._check(x, y)
        b = self.phi.value(x)
        if math.isinf(b):
            warnings.warn("Hamiltonian evaluated outside Dom_1(L): returning -inf", DomainWarning, stacklevel=2)
            return -math.inf
        return self.phi.value(-y) - b - float(y @ (self.gamma @ x))

    def derived_field(self, x):
        (x,) = self._check(x)
        return self.gamma @ x + np.asarray(self.phi.subgradient(x), dtype=float).ravel()


def _solve_psd(Q, r, rtol=1e-10):
    """Minimum-norm solution of ``Q z = r``; ``None`` when ``r`` is outside the range."""
    z, *_ = np.linalg.lstsq(Q, r, rcond=None)
    if np.linalg.norm(Q @ z - r) > rtol * max(1.0, np.linalg.norm(r)):
        return None
    return z


class QuadraticLagrangian(ASDLagrangian):
    """``L(z) = 1/2 z.Q z + c.z + e`` with ``z = (x, p)`` and ``Q`` positive semidefinite."""

    def __init__(self, Q, c, e=0.0):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] % 2:
            raise DimensionError("Q must be a square matrix of even order")
        self.Q = 0.5 * (Q + Q.T)
        self.c = np.asarray(c, dtype=float).ravel()
        self.e = float(e)
        self.dim = Q.shape[0] // 2

    def _blocks(self):
        n = self.dim
        Q = self.Q
        return Q[:n, :n], Q[:n, n:], Q[n:, n:], self.c[:n], self.c[n:]

    def value(self, x, p) -> float:
        x, p = self._check(x, p)
        z = np.concatenate([x, p])
        return 0.5 * z @ self.Q @ z + self.c @ z + self.e

    def conjugate(self, q, y) -> float:
        q, y = self._check(q, y)
        r = np.concatenate([q, y]) - self.c
        z = _solve_psd(self.Q, r)
        return math.inf if z is None else 0.5 * r @ z - self.e

    def hamiltonian(self, x, y) -> float:
        x, y = self._check(x, y)
        Qxx, Qxp, Qpp, cx, cp = self._blocks()
        r = y - Qxp.T @ x - cp
        z = _solve_psd(Qpp, r)
        if z is None:
            return math.inf
        return 0.5 * r @ z - (0.5 * x @ Qxx @ x + cx @ x + self.e)

    def derived_field(self, x):
        (x,) = self._check(x)
        _, Qxp, Qpp, _, cp = self._blocks()
        # stationary point of p -> L(x, -p) - <x, p>
        return np.linalg.solve(Qpp, Qxp.T @ x + cp + x)


def _quadratic_data(phi, n):
    """``(A, l)`` with ``phi(x) = 1/2 x.A x + l.x`` and ``A`` positive definite."""
    if isinstance(phi, QuadraticForm):
        w = np.broadcast_to(phi.operator, (n,)) if phi.operator.ndim <= 1 else None
        if w is None or np.any(w <= 0):
            raise UnsupportedOperation("quadratic route needs a positive definite diagonal operator")
        lin = np.zeros(n) if phi.linear is None else np.asarray(phi.linear, dtype=float).ravel()
        if lin.size != n:
            raise DimensionError("linear term size mismatch")
        return np.diag(phi.scale * w), lin
    if isinstance(phi, ScaledSquare) and phi.coefficient > 0:
        return 0.5 * phi.coefficient * np.eye(n), np.zeros(n)
    raise UnsupportedOperation(f"{type(phi).__name__} is not a nondegenerate quadratic")


def _add_conjugate_term(Q, c, e, A, lin, M):
    """Accumulate ``phi*(M z)`` for ``phi = 1/2 x.A x + lin.x``."""
    B = np.linalg.inv(A)
    Q += M.T @ B @ M
    c -= M.T @ B @ lin
    return e + 0.5 * lin @ B @ lin


def as_quadratic(L: ASDLagrangian) -> QuadraticLagrangian:
    """Joint quadratic form of a quadratic-family Lagrangian."""
    if isinstance(L, QuadraticLagrangian):
        return L
    if isinstance(L, (Potential, SkewPotential)):
        n = L.dim
        if n is None:
            raise UnsupportedOperation("Potential needs an explicit dim for the quadratic route")
        A, lin = _quadratic_data(L.phi, n)
        Q = np.zeros((2 * n, 2 * n))
        c = np.zeros(2 * n)
        Q[:n, :n] += A
        c[:n] += lin
        G = L.gamma if isinstance(L, SkewPotential) else np.zeros((n, n))
        M = np.hstack([-G, -np.eye(n)])
        e = _add_conjugate_term(Q, c, 0.0, A, lin, M)
        return QuadraticLagrangian(Q, c, e)
    raise UnsupportedOperation(f"{type(L).__name__} has no quadratic form")


def _pullback(L: QuadraticLagrangian, S):
    return S.T @ L.Q @ S, S.T @ L.c, L.e


def _eliminate(Q, c, e, keep):
    """Minimize the quadratic over every coordinate not in the first ``keep``."""
    Qkk, Qke, Qee = Q[:keep, :keep], Q[:keep, keep:], Q[keep:, keep:]
    ck, ce = c[:keep], c[keep:]
    Qee_inv = np.linalg.inv(Qee)
    return QuadraticLagrangian(Qkk - Qke @ Qee_inv @ Qke.T, ck - Qke @ Qee_inv @ ce, e - 0.5 * ce @ Qee_inv @ ce)


def _blocks_matrix(rows):
    return np.block(rows)


def _quadratic_oplus(L: QuadraticLagrangian, M: QuadraticLagrangian) -> QuadraticLagrangian:
    n = L.dim
    if M.dim != n:
        raise DimensionError("oplus of Lagrangians on different spaces")
    I, O = np.eye(n), np.zeros((n, n))
    # z = (x, p, r): L(x, r) + M(x, p - r)
    S_L = _blocks_matrix([[I, O, O], [O, O, I]])
    S_M = _blocks_matrix([[I, O, O], [O, I, -I]])
    QL, cL, eL = _pullback(L, S_L)
    QM, cM, eM = _pullback(M, S_M)
    return _eliminate(QL + QM, cL + cM, eL + eM, 2 * n)


def _quadratic_regularize(L: QuadraticLagrangian, lam, variant) -> QuadraticLagrangian:
    n = L.dim
    I, O = np.eye(n), np.zeros((n, n))

    def sq(sel, coef):
        return coef * sel.T @ sel

    if variant == "first":
        # z = (x, r, y): L(y, r) + |x - y|^2/(2 lam) + lam |r|^2 / 2
        Q, c, e = _pullback(L, _blocks_matrix([[O, O, I], [O, I, O]]))
        Q = Q + sq(_blocks_matrix([[I, O, -I]]), 1 / lam) + sq(_blocks_matrix([[O, I, O]]), lam)
        return _eliminate(Q, c, e, 2 * n)
    if variant == "second":
        # z = (x, r, s): L(x, s) + |r - s|^2/(2 lam) + lam |x|^2 / 2
        Q, c, e = _pullback(L, _blocks_matrix([[I, O, O], [O, O, I]]))
        Q = Q + sq(_blocks_matrix([[O, I, -I]]), 1 / lam) + sq(_blocks_matrix([[I, O, O]]), lam)
        return _eliminate(Q, c, e, 2 * n)
    # z = (x, r, y, s)
    Q, c, e = _pullback(L, _blocks_matrix([[O, O, I, O], [O, O, O, I]]))
    Q = (Q + sq(_blocks_matrix([[I, O, -I, O]]), 1 / lam) + sq(_blocks_matrix([[O, I, O, O]]), lam)
         + sq(_blocks_matrix([[O, -I, O, I]]), 1 / lam) + sq(_blocks_matrix([[O, O, I, O]]), lam))
    return _eliminate(Q, c, e, 2 * n)


def _interp_inf(xq, grid, vals):
    """Piecewise-linear interpolation, +inf outside the grid."""
    out = np.interp(xq, grid, vals)
    outside = (np.asarray(xq) < grid[0]) | (np.asarray(xq) > grid[-1])
    return np.where(outside, np.inf, out)


class _GridFamily(ASDLagrangian):
    """Shared machinery for scalar (1D) Lagrangians with attached grids."""

    dim = 1
    xs: np.ndarray
    ps: np.ndarray

    def row(self, x: float, p):
        """``L(x, p)`` for a fixed scalar ``x`` and an array of ``p``."""
        raise NotImplementedError

    def value(self, x, p) -> float:
        x, p = self._check(x, p)
        return float(self.row(x[0], np.array([p[0]]))[0])

    def table(self) -> np.ndarray:
        if getattr(self, "_table", None) is None:
            self._table = np.stack([self.row(x, self.ps) for x in self.xs])
        return self._table

    def conjugate(self, q, y) -> float:
        q, y = self._check(q, y)
        if getattr(self, "_joint", None) is None:
            self._joint = TabulatedConvex((self.xs, self.ps), self.table())
        return float(self._joint.conjugate_many(np.array([[q[0], y[0]]]))[0])

    def hamiltonian(self, x, y) -> float:
        x, y = self._check(x, y)
        vals = self.row(x[0], self.ps)
        if not np.any(np.isfinite(vals)):
            warnings.warn("Hamiltonian evaluated outside Dom_1(L): returning -inf", DomainWarning, stacklevel=2)
            return -math.inf
        return float(np.max(y[0] * self.ps - vals))

    def gap_row(self, x: float, p):
        """``L(x, -p) - x p`` on an array of ``p``; zero exactly on the derived field."""
        return self.row(x, -np.asarray(p)) - x * np.asarray(p)

    def derived_field(self, x):
        (x,) = self._check(x)
        x = float(x[0])
        cand = np.union1d(-self.ps, self.ps)
        g = self.gap_row(x, cand)
        j = int(np.argmin(g))
        lo = cand[max(j - 4, 0)]
        hi = cand[min(j + 4, len(cand) - 1)]
        if hi <= lo:
            return np.array([cand[j]])
        # the gap is a minimum of quadratics between nodes: rescan densely before Brent
        fine = np.linspace(lo, hi, 801)
        gf = self.gap_row(x, fine)
        k = int(np.argmin(gf))
        if gf[k] < g[j]:
            j, cand, g = k, fine, gf
            lo, hi = fine[max(k - 1, 0)], fine[min(k + 1, len(fine) - 1)]
        res = minimize_scalar(lambda t: float(self.gap_row(x, np.array([t]))[0]), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        best = res.x if res.fun <= g[j] else cand[j]
        return np.array([best])


class TabulatedLagrangian(_GridFamily):
    """A Lagrangian on the real line sampled on an ``(xs, ps)`` tensor grid."""

    def __init__(self, xs, ps, values):
        self.xs = np.asarray(xs, dtype=float)
        self.ps = np.asarray(ps, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(self.xs), len(self.ps)):
            raise DimensionError("values must have shape (len(xs), len(ps))")
        self._table = self.values

    @classmethod
    def from_function(cls, L, xs, ps):
        xs = np.asarray(xs, dtype=float)
        ps = np.asarray(ps, dtype=float)
        vals = np.array([[L(np.array([x]), np.array([p])) for p in ps] for x in xs])
        return cls(xs, ps, vals)

    def row(self, x, p):
        if x < self.xs[0] or x > self.xs[-1]:
            return np.full(np.shape(p), np.inf)
        i = min(int(np.searchsorted(self.xs, x, side="right")) - 1, len(self.xs) - 2)
        t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i])
        if t == 0.0 or t == 1.0:
            col = self.values[i + int(t)]
        else:
            col = (1 - t) * self.values[i] + t * self.values[i + 1]
        return _interp_inf(p, self.ps, col)

    def derived_field(self, x):
        (x,) = self._check(x)
        # piecewise linear in p: the minimum of the gap sits on a grid node
        g = self.gap_row(float(x[0]), -self.ps)
        return np.array([-self.ps[int(np.argmin(g))]])


class GridOplus(_GridFamily):
    """``L (+) M (x, p) = min_r L(x, r) + M(x, p - r)`` with ``r`` on the p-grid of ``L``."""

    def __init__(self, L: _GridFamily, M: _GridFamily):
        self.L, self.M = L, M
        self.xs, self.ps = L.xs, L.ps
        self._table = None

    def row(self, x, p):
        r = self.ps
        lr = self.L.row(x, r)
        p = np.atleast_1d(np.asarray(p, dtype=float))
        out = np.empty(p.shape)
        for i, pi in enumerate(p):
            out[i] = np.min(lr + self.M.row(x, pi - r))
        return out


class GridRegularized(_GridFamily):
    """Brute-force lambda-regularizations of a grid-family Lagrangian.

    ``first``: inf over ``y`` of ``L(y, r) + |x-y|^p/(lam p) + lam^(q-1) |r|^q / q``;
    ``second``: inf over ``s`` of ``L(x, s) + |r-s|^q/(lam q) + lam^(p-1) |x|^p / p``;
    ``both``: the two-sided version with quadratic penalties (``p = 2``).
    """

    def __init__(self, base: _GridFamily, lam, variant="second", exponent=2.0):
        if not lam > 0:
            raise InvalidArgument("lambda must be positive")
        if variant not in VARIANTS:
            raise InvalidArgument(f"variant must be one of {VARIANTS}")
        if not exponent > 1:
            raise InvalidArgument("exponent must exceed 1")
        if variant == "both" and exponent != 2:
            raise UnsupportedOperation("the two-sided regularization is defined for exponent 2")
        self.base = base
        self.lam = float(lam)
        self.variant = variant
        self.p = float(exponent)
        self.q = self.p / (self.p - 1.0)
        self.xs, self.ps = base.xs, base.ps
        self._table = None
        self._base_table = base.table()

    def row(self, x, r):
        lam, p, q = self.lam, self.p, self.q
        r = np.atleast_1d(np.asarray(r, dtype=float))
        ys, ss = self.xs, self.ps
        if self.variant == "first":
            out = np.empty(r.shape)
            pen_y = np.abs(x - ys) ** p / (lam * p)
            for i, ri in enumerate(r):
                col = np.array([_interp_inf(ri, ss, self._base_table[k]) for k in range(len(ys))])
                out[i] = np.min(col + pen_y) + lam ** (q - 1) * abs(ri) ** q / q
            return out
        if self.variant == "second":
            rowx = self.base.row(x, ss)
            pen = np.abs(r[:, None] - ss[None, :]) ** q / (lam * q)
            return np.min(rowx[None, :] + pen, axis=1) + lam ** (p - 1) * abs(x) ** p / p
        tab = self._base_table
        pen_y = (x - ys) ** 2 / (2 * lam) + lam * ys ** 2 / 2
        out = np.empty(r.shape)
        for i, ri in enumerate(r):
            pen_s = (ss - ri) ** 2 / (2 * lam)
            out[i] = np.min(tab + pen_y[:, None] + pen_s[None, :]) + lam * ri ** 2 / 2
        return out


def lagrangian_value(L: ASDLagrangian, x, p) -> float:
    return L.value(x, p)


def hamiltonian(L: ASDLagrangian, x, y) -> float:
    """``H_L(x, y) = sup_p <y, p> - L(x, p)``."""
    return L.hamiltonian(x, y)


def derived_field(L: ASDLagrangian, x):
    """The unique ``p`` with ``L(x, -p) - <x, p> = 0`` (smooth kinds)."""
    return L.derived_field(x)


def oplus(L: ASDLagrangian, M: ASDLagrangian) -> ASDLagrangian:
    """Infimal convolution in the second variable."""
    if isinstance(L, _GridFamily) and isinstance(M, _GridFamily):
        return GridOplus(L, M)
    try:
        return _quadratic_oplus(as_quadratic(L), as_quadratic(M))
    except UnsupportedOperation:
        raise UnsupportedOperation("oplus needs two quadratic or two grid-backed Lagrangians") from None


def regularize(L: ASDLagrangian, lam: float, variant: str = "second", p: float = 2.0) -> ASDLagrangian:
    """The lambda-regularizations ``L^1``, ``L^2`` and ``L^{1,2}``."""
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    if variant not in VARIANTS:
        raise InvalidArgument(f"variant must be one of {VARIANTS}")
    if isinstance(L, _GridFamily):
        return GridRegularized(L, lam, variant, p)
    if p != 2:
        raise UnsupportedOperation("closed-form regularization is implemented for exponent 2")
    return _quadratic_regularize(as_quadratic(L), float(lam), variant)


def selfduality_residual(L: ASDLagrangian, samples) -> float:
    """``max |L*(p, x) - L(-x, -p)|`` over sample pairs ``(x, p)``."""
    worst = 0.0
    for x, p in samples:
        x = _vec(x)
        p = _vec(p)
        a = L.conjugate(p, x)
        b = L.value(-x, -p)
        if math.isinf(a) and math.isinf(b):
            continue
        worst = max(worst, abs(a - b))
    return worst


def pairing_sum(L: ASDLagrangian, x, p) -> float:
    """``L(x, p) + <x, p>``, nonnegative for anti-selfdual ``L``."""
    return L.value(x, p) + pairing(_vec(x), _vec(p))
