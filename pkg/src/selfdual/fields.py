"""Pseudo-spectral divergence-free velocity fields on the periodic torus ``[0, 2 pi)^d``.

Coefficients use the full ``fftn`` layout normalized so that ``u_hat = fftn(u) / n**d``.
With this normalization the spaces of the evolution triple are weighted sums:

* ``|u|_H^2 = sum |u_hat|^2`` (the mean of ``|u|^2`` over the torus),
* ``|u|_X^2 = sum |k|^2 |u_hat|^2``,
* ``|p|_{X*}^2 = sum |k|^-2 |p_hat|^2``.

Every field is kept inside the 2/3-rule cube ``|k_i| <= (n - 1) // 3``; there the
quadratic product of two retained fields is computed without aliasing, so the
discrete advection is exactly skew: ``<Lambda u, u> = 0`` up to roundoff.
Array-level kernels accept arbitrary leading batch axes in front of ``(d, n, ..., n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionError, InvalidArgument

__all__ = [
    "TorusGrid",
    "SpectralField",
    "leray_project",
    "truncate",
    "project",
    "advection",
    "advect",
    "advect_adjoint",
    "duality_map",
    "stokes_inverse",
    "inner",
    "h_norm2",
    "x_norm2",
    "xstar_norm2",
    "regularity_ratio",
    "to_physical",
    "from_physical",
    "taylor_green",
    "shear",
    "random_field",
    "resample",
]


@dataclass(frozen=True)
class TorusGrid:
    """Discretization of the torus with ``n`` modes per dimension and viscosity ``nu``."""

    d: int
    n: int
    nu: float = 1.0

    def __post_init__(self):
        if self.d not in (2, 3):
            raise InvalidArgument("d must be 2 or 3")
        if self.n < 8 or self.n & (self.n - 1):
            raise InvalidArgument("n must be a power of two, at least 8")
        if not self.nu > 0:
            raise InvalidArgument("viscosity must be positive")

    @property
    def shape(self) -> tuple:
        return (self.d,) + (self.n,) * self.d

    @property
    def axes(self) -> tuple:
        return tuple(range(-self.d, 0))

    @property
    def kmax(self) -> int:
        """Largest retained wavenumber per axis under the 2/3 rule."""
        return (self.n - 1) // 3

    @cached_property
    def wavevectors(self) -> np.ndarray:
        k1 = np.fft.fftfreq(self.n, 1.0 / self.n)
        return np.stack(np.meshgrid(*([k1] * self.d), indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.wavevectors ** 2, axis=0)

    @cached_property
    def inv_k2(self) -> np.ndarray:
        k2 = self.k2
        return np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)

    @cached_property
    def mask(self) -> np.ndarray:
        """Retained modes: inside the dealiasing cube and not the mean."""
        inside = np.all(np.abs(self.wavevectors) <= self.kmax, axis=0)
        return inside & (self.k2 > 0)

    @cached_property
    def distinct_k2(self) -> np.ndarray:
        return np.unique(self.k2[self.mask])

    def zeros(self, *batch) -> np.ndarray:
        return np.zeros(tuple(batch) + self.shape, dtype=complex)

    def _check(self, arr) -> np.ndarray:
        arr = np.asarray(arr)
        if arr.shape[-self.d - 1:] != self.shape:
            raise DimensionError(f"expected trailing shape {self.shape}, got {arr.shape}")
        return arr


@dataclass(frozen=True, eq=False)
class SpectralField:
    """An immutable velocity field given by its Fourier coefficients."""

    grid: TorusGrid
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.grid._check(self.coefficients), dtype=complex)
        if c.shape != self.grid.shape:
            raise DimensionError(f"expected shape {self.grid.shape}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def h_norm2(self) -> float:
        return h_norm2(self.coefficients)

    def x_norm2(self) -> float:
        return x_norm2(self.grid, self.coefficients)

    def physical(self) -> np.ndarray:
        return to_physical(self.grid, self.coefficients)

    def violations(self) -> dict:
        """Size of the departures from incompressibility, reality and zero mean."""
        g = self.grid
        c = self.coefficients
        scale = max(np.sqrt(h_norm2(c)), np.finfo(float).tiny)
        div = np.abs(np.sum(g.wavevectors * c, axis=0)).max()
        flipped = np.conj(np.roll(np.flip(c, axis=g.axes), 1, axis=g.axes))
        mean = np.abs(c[(slice(None),) + (0,) * g.d]).max()
        return {
            "divergence": float(div / scale),
            "reality": float(np.abs(c - flipped).max() / scale),
            "mean": float(mean / scale),
        }

    def is_valid(self, tol: float = 1e-12) -> bool:
        return all(v <= tol for v in self.violations().values())

    def __add__(self, other):
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coefficients - other.coefficients)

    def __mul__(self, s):
        return SpectralField(self.grid, self.coefficients * s)

    __rmul__ = __mul__


def _coeffs(u):
    return u.coefficients if isinstance(u, SpectralField) else np.asarray(u)


def _grid_of(u, grid):
    if grid is None:
        if not isinstance(u, SpectralField):
            raise InvalidArgument("a grid is required for raw coefficient arrays")
        return u.grid
    return grid


def _like(template, grid, coeffs):
    """Wrap the result in a field when the input was one."""
    return SpectralField(grid, coeffs) if isinstance(template, SpectralField) else coeffs


def leray_project(grid: TorusGrid, raw) -> np.ndarray:
    """Apply ``I - k k^T / |k|^2`` mode by mode; the mean mode is left alone."""
    c = grid._check(_coeffs(raw))
    k = grid.wavevectors
    div = np.sum(k * c, axis=-grid.d - 1, keepdims=True)
    return _like(raw, grid, c - k * div * grid.inv_k2)


def truncate(grid: TorusGrid, raw) -> np.ndarray:
    """Zero every mode outside the dealiasing cube, and the mean."""
    return grid._check(_coeffs(raw)) * grid.mask


def project(grid: TorusGrid, raw) -> np.ndarray:
    """Truncate and Leray-project: the orthogonal projection onto retained div-free fields."""
    return leray_project(grid, truncate(grid, raw))


def to_physical(grid: TorusGrid, coeffs) -> np.ndarray:
    c = grid._check(_coeffs(coeffs))
    return np.fft.ifftn(c, axes=grid.axes).real * grid.n ** grid.d


def from_physical(grid: TorusGrid, values) -> np.ndarray:
    values = grid._check(values)
    return np.fft.fftn(values, axes=grid.axes) / grid.n ** grid.d


def _gradient_physical(grid, c):
    """``g[..., k, j, x] = d_k u_j`` in physical space."""
    k = grid.wavevectors
    dc = 1j * k[:, None] * np.expand_dims(c, -grid.d - 2)
    return to_physical(grid, dc)


def advect(grid: TorusGrid, u) -> np.ndarray:
    """Dealiased, projected ``(u . grad) u`` for coefficient arrays (batch-aware)."""
    c = grid._check(_coeffs(u))
    up = to_physical(grid, c)
    g = _gradient_physical(grid, c)
    # N_j = sum_k u_k d_k u_j
    prod = np.sum(np.expand_dims(up, -grid.d - 1) * g, axis=-grid.d - 2)
    return project(grid, from_physical(grid, prod))


def advect_adjoint(grid: TorusGrid, u, z) -> np.ndarray:
    """Transpose of the linearized advection at ``u`` applied to ``z``.

    Returns ``P[(grad u)^T z - (u . grad) z]``, the H-gradient of ``<z, Lambda u>``.
    """
    cu = grid._check(_coeffs(u))
    cz = project(grid, _coeffs(z))
    up = to_physical(grid, cu)
    zp = to_physical(grid, cz)
    gu = _gradient_physical(grid, cu)
    gz = _gradient_physical(grid, cz)
    # [(grad u)^T z]_k = sum_j z_j d_k u_j
    t1 = np.sum(np.expand_dims(zp, -grid.d - 2) * gu, axis=-grid.d - 1)
    t2 = np.sum(np.expand_dims(up, -grid.d - 1) * gz, axis=-grid.d - 2)
    return project(grid, from_physical(grid, t1 - t2))


def advection(u: SpectralField) -> SpectralField:
    """``Lambda u``; the dual vector is carried in a field container."""
    return SpectralField(u.grid, advect(u.grid, u.coefficients))


def inner(a, b) -> float:
    """The H pairing ``Re sum conj(a) b``, also the X-X* duality pairing."""
    a = _coeffs(a)
    b = _coeffs(b)
    if a.shape != b.shape:
        raise DimensionError(f"pairing of shapes {a.shape} and {b.shape}")
    return float(np.vdot(a, b).real)


def _abs2(c):
    return c.real ** 2 + c.imag ** 2


def h_norm2(u) -> float:
    return float(np.sum(_abs2(_coeffs(u))))


def x_norm2(grid: TorusGrid, u) -> float:
    return float(np.sum(grid.k2 * _abs2(grid._check(_coeffs(u)))))


def xstar_norm2(grid: TorusGrid, p) -> float:
    return float(np.sum(grid.inv_k2 * _abs2(grid._check(_coeffs(p)))))


def duality_map(u, grid: TorusGrid | None = None) -> np.ndarray:
    """``J u``: multiply each mode by ``|k|^2``."""
    g = _grid_of(u, grid)
    return _like(u, g, g.k2 * g._check(_coeffs(u)))


def stokes_inverse(p, grid: TorusGrid | None = None, atol: float = 1e-14) -> np.ndarray:
    """``J^{-1} p``: multiply each mode by ``|k|^-2``; the input must have zero mean."""
    grid = _grid_of(p, grid)
    c = grid._check(_coeffs(p))
    mean = c[(Ellipsis, slice(None)) + (0,) * grid.d]
    if np.abs(mean).max(initial=0.0) > atol:
        raise InvalidArgument("stokes_inverse needs a zero-mean dual vector")
    return _like(p, grid, grid.inv_k2 * c)


def regularity_ratio(u: SpectralField) -> float:
    """``|Lambda u|_{X*}`` relative to the bound appearing in the a priori estimates."""
    g = u.grid
    h = np.sqrt(u.h_norm2())
    x = np.sqrt(u.x_norm2())
    if h == 0:
        raise InvalidArgument("regularity ratio of the zero field")
    lam = np.sqrt(xstar_norm2(g, advection(u)))
    if g.d == 2:
        return float(lam / (h * x))
    return float(lam / (np.sqrt(h) * x ** 1.5))


def resample(u: SpectralField, grid: TorusGrid) -> SpectralField:
    """The same field on another resolution: shared modes are copied, the rest dropped."""
    src = u.grid
    if src.d != grid.d:
        raise DimensionError("resampling between different dimensions")
    K = min(src.kmax, grid.kmax)
    ks = np.arange(-K, K + 1)
    idx_src = np.ix_(*([ks % src.n] * src.d))
    idx_dst = np.ix_(*([ks % grid.n] * grid.d))
    out = grid.zeros()
    for j in range(grid.d):
        out[j][idx_dst] = u.coefficients[j][idx_src]
    return SpectralField(grid, project(grid, out))


def _coords(grid):
    x1 = 2 * np.pi * np.arange(grid.n) / grid.n
    return np.meshgrid(*([x1] * grid.d), indexing="ij")


def _finish(grid, values, amplitude=None):
    c = project(grid, from_physical(grid, np.asarray(values, dtype=float)))
    if amplitude is not None:
        norm = np.sqrt(h_norm2(c))
        if norm > 0:
            c = c * (amplitude / norm)
    return SpectralField(grid, c)


def taylor_green(grid: TorusGrid, amplitude: float = 1.0) -> SpectralField:
    """``(sin x cos y, -cos x sin y)`` in 2D; the ``cos z`` extension in 3D."""
    X = _coords(grid)
    if grid.d == 2:
        x, y = X
        u = [np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)]
    else:
        x, y, z = X
        u = [np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), np.zeros_like(x)]
    return _finish(grid, amplitude * np.stack(u))


def shear(grid: TorusGrid, amplitude: float = 1.0, mode: int = 1) -> SpectralField:
    """Unidirectional shear ``(sin(m y), 0, ...)``."""
    X = _coords(grid)
    u = np.zeros(grid.shape)
    u[0] = amplitude * np.sin(mode * X[1])
    return _finish(grid, u)


def random_field(grid: TorusGrid, seed: int = 0, amplitude: float = 1.0, kmax: float | None = None) -> SpectralField:
    """Seeded random retained field with ``|k| <= kmax`` and H-norm ``amplitude``."""
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(grid.shape)
    c = from_physical(grid, values)
    if kmax is not None:
        c = c * (grid.k2 <= kmax ** 2)
    c = project(grid, c)
    norm = np.sqrt(h_norm2(c))
    if norm == 0:
        raise InvalidArgument("random field has no retained modes; increase kmax")
    return SpectralField(grid, c * (amplitude / norm))
