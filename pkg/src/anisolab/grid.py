"""
Half-space grid and spectral field containers.

The half-space {x3 > 0} is discretised as a periodic horizontal box of side
``L`` (``N`` samples per axis) times a truncated vertical ray ``[0, Z]`` with
``M`` uniform nodes.  Horizontal structure is carried by real-to-complex
Fourier coefficients on every vertical node.

Array layout
------------
Both spectral and physical arrays are stored vertical-first:

    coeffs[m, k1, k2]   shape (M, N, N // 2 + 1), complex
    values[m, i1, i2]   shape (M, N, N), real

so that each vertical level is one contiguous 2D slab for the FFTs.  The
``k2`` axis is the non-negative half-plane of an ``rfft2``; the conjugate
half is implied by Hermitian symmetry.  Coefficients are normalised as
Fourier-series coefficients, i.e. ``f = sum_k c_k exp(i xi_k . x)``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

__all__ = [
    "GridSpec",
    "SpectralField",
    "PhysicalField",
    "VectorField",
    "make_grid",
    "to_spectral",
    "to_physical",
    "horizontal_derivative",
    "fft_workers",
]


def fft_workers() -> int:
    """Worker count for the FFTs, capped by ``ANISOLAB_THREADS``."""
    cap = os.environ.get("ANISOLAB_THREADS")
    if cap is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(cap))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """
    Discretisation of the half-space.

    Parameters
    ----------
    L : float
        Horizontal period.
    N : int
        Horizontal samples per axis, a power of two, at least 8.
    Z : float
        Vertical truncation height.
    M : int
        Number of vertical nodes ``x3 = m * Z / (M - 1)``; node 0 is the wall.
    dealias_fraction : float
        Fraction of modes retained per axis by the dealiasing mask.
    order : int
        Accuracy order of the vertical finite differences; the vertical
        kernels use Lagrange reconstructions on ``order`` nodes.
    """

    L: float
    N: int
    Z: float
    M: int
    dealias_fraction: float = 2.0 / 3.0
    order: int = 10

    def __post_init__(self) -> None:
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 8 and (self.N & (self.N - 1)) == 0):
            raise ValueError(f"N not power of two (or < 8): {self.N!r}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L!r}")
        if not self.Z > 0:
            raise ValueError(f"Z must be positive, got {self.Z!r}")
        if not (isinstance(self.M, (int, np.integer)) and self.M >= 4):
            raise ValueError(f"M must be an integer >= 4, got {self.M!r}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction!r}")
        if not (isinstance(self.order, (int, np.integer)) and self.order >= 2 and self.order % 2 == 0):
            raise ValueError(f"order must be an even integer >= 2, got {self.order!r}")

    # -- coordinates ---------------------------------------------------------

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dz(self) -> float:
        return self.Z / (self.M - 1)

    @cached_property
    def x3(self) -> np.ndarray:
        return np.linspace(0.0, self.Z, self.M)

    @cached_property
    def xh(self) -> np.ndarray:
        return np.arange(self.N) * self.dx

    @property
    def vertical_order(self) -> int:
        """Effective vertical order: ``order`` limited by the node count."""
        return min(self.order, (self.M - 1) // 2 * 2)

    # -- wavenumbers ---------------------------------------------------------

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.M, self.N, self.N // 2 + 1)

    @property
    def physical_shape(self) -> tuple[int, int, int]:
        return (self.M, self.N, self.N)

    @cached_property
    def k1(self) -> np.ndarray:
        """Integer wavenumbers along axis 1 (full FFT ordering)."""
        return np.rint(np.fft.fftfreq(self.N, 1.0 / self.N)).astype(int)

    @cached_property
    def k2(self) -> np.ndarray:
        """Integer wavenumbers along axis 2 (non-negative half)."""
        return np.arange(self.N // 2 + 1)

    @cached_property
    def xi1(self) -> np.ndarray:
        return np.broadcast_to((2 * np.pi / self.L) * self.k1[:, None], self.spectral_shape[1:])

    @cached_property
    def xi2(self) -> np.ndarray:
        return np.broadcast_to((2 * np.pi / self.L) * self.k2[None, :], self.spectral_shape[1:])

    @cached_property
    def xi_abs(self) -> np.ndarray:
        """``|xi_h|`` on the half-plane, shape (N, N // 2 + 1)."""
        return np.hypot(self.xi1, self.xi2)

    @cached_property
    def xi_min(self) -> float:
        return 2 * np.pi / self.L

    @cached_property
    def xi_max(self) -> float:
        return float(self.xi_abs.max())

    @property
    def max_retained_k(self) -> int:
        return int(np.floor(self.dealias_fraction * self.N / 2))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        kmax = self.max_retained_k
        return (np.abs(self.k1)[:, None] <= kmax) & (np.abs(self.k2)[None, :] <= kmax)

    @cached_property
    def odd_mask(self) -> np.ndarray:
        """False on Nyquist rows/columns, where odd symbols are zeroed."""
        nyq = self.N // 2
        return (np.abs(self.k1)[:, None] != nyq) & (self.k2[None, :] != nyq)

    @cached_property
    def half_plane_weight(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full Fourier sum."""
        w = np.full(self.N // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return np.broadcast_to(w[None, :], self.spectral_shape[1:])

    def zeros(self) -> "SpectralField":
        return SpectralField(self, np.zeros(self.spectral_shape, dtype=complex))


def make_grid(L: float, N: int, Z: float, M: int, dealias_fraction: float = 2.0 / 3.0,
              order: int = 10) -> GridSpec:
    """Validate parameters and return a :class:`GridSpec` with its tables warmed."""
    grid = GridSpec(float(L), int(N), float(Z), int(M), float(dealias_fraction), int(order))
    grid.xi_abs, grid.dealias_mask  # noqa: B018 - precompute
    return grid


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Horizontal Fourier coefficients of a scalar field on every vertical node."""

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs)
        if c.shape != self.grid.spectral_shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.spectral_shape}")
        if not np.iscomplexobj(c):
            c = c.astype(complex)
        if not np.all(np.isfinite(c)):
            raise ValueError("spectral field has non-finite entries")
        object.__setattr__(self, "coeffs", _frozen(c))

    def _wrap(self, c: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, c)

    def _other(self, other):
        if isinstance(other, SpectralField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.coeffs
        return other

    def __add__(self, other):
        return self._wrap(self.coeffs + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.coeffs - self._other(other))

    def __rsub__(self, other):
        return self._wrap(self._other(other) - self.coeffs)

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __mul__(self, other):
        """Scalar, per-mode ``(N, N//2+1)`` or full-shape multiplication."""
        return self._wrap(self.coeffs * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.coeffs / other)

    def level(self, m: int) -> np.ndarray:
        return self.coeffs[m]

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Real samples on the uniform horizontal grid times the vertical nodes."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.physical_shape:
            raise ValueError(f"value shape {v.shape} does not match grid {self.grid.physical_shape}")
        object.__setattr__(self, "values", _frozen(v))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Velocity ``(u1, u2, u3)`` on a shared grid."""

    components: tuple[SpectralField, SpectralField, SpectralField]
    divergence_free: bool = False

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if len(comps) != 3:
            raise ValueError("a vector field has exactly three components")
        g = comps[0].grid
        if any(c.grid != g for c in comps[1:]):
            raise ValueError("components live on different grids")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "VectorField":
        z = grid.zeros()
        return cls((z, z, z), divergence_free=True)

    @property
    def grid(self) -> GridSpec:
        return self.components[0].grid

    @property
    def u1(self) -> SpectralField:
        return self.components[0]

    @property
    def u2(self) -> SpectralField:
        return self.components[1]

    @property
    def u3(self) -> SpectralField:
        return self.components[2]

    def __getitem__(self, i: int) -> SpectralField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def _combine(self, other, op) -> "VectorField":
        if isinstance(other, VectorField):
            comps = tuple(op(a, b) for a, b in zip(self, other))
            flag = self.divergence_free and other.divergence_free
        else:
            comps = tuple(op(a, other) for a in self)
            flag = self.divergence_free
        return VectorField(comps, divergence_free=flag)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __mul__(self, scalar):
        return self._combine(scalar, lambda a, b: a * b)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self)


def _hermitian_project(c: np.ndarray, N: int) -> np.ndarray:
    """Impose ``c(-k1, k2) = conj c(k1, k2)`` on the self-conjugate columns."""
    for col in (0, N // 2):
        a = c[..., :, col]
        mirrored = np.conj(a[..., (-np.arange(N)) % N])
        c[..., :, col] = 0.5 * (a + mirrored)
    return c


def to_spectral(f: PhysicalField) -> SpectralField:
    grid = f.grid
    c = scipy.fft.rfft2(f.values, axes=(1, 2), workers=fft_workers()) / grid.N**2
    return SpectralField(grid, _hermitian_project(c, grid.N))


def to_physical(f: SpectralField) -> PhysicalField:
    grid = f.grid
    v = scipy.fft.irfft2(f.coeffs * grid.N**2, s=(grid.N, grid.N), axes=(1, 2), workers=fft_workers())
    return PhysicalField(grid, v)


def horizontal_derivative(f: SpectralField, axis: int) -> SpectralField:
    """Spectral ``d/dx_axis`` for ``axis`` in {1, 2}; Nyquist modes are zeroed."""
    g = f.grid
    xi = g.xi1 if axis == 1 else g.xi2
    return f * (1j * xi * g.odd_mask)
