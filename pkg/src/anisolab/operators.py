"""
Half-space operators: horizontal Fourier multipliers and vertical kernels.

Horizontal multipliers act mode by mode with ``b = |xi_h|``:

    riesz_axis{1,2}   i xi_k / b
    abs_grad_pow(s)   b ** s
    heat(t)           exp(-t b^2)
    heat_phi1(t)      (1 - exp(-t b^2)) / b^2      (t on the mean mode)
    poisson(x3)       exp(-x3 b)

Vertical kernels act on the ``x3`` profile of every mode.  With the causal
and anti-causal integrals ``C`` and ``A`` of :mod:`anisolab.vertical`

    U  = C
    W  = C + A            (kernel b e^{-b|x-y|})
    V  = C - A            (kernel b sgn(x-y) e^{-b|x-y|}, sgn(0) = 0)
    T f(x) = e^{-bx} (A f)(0)
    W± = (W ± T) / 2,  V± = (V ± T) / 2
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, SpectralField
from .vertical import kernel_quadrature

__all__ = [
    "KernelKind",
    "MultiplierSpec",
    "KernelPair",
    "apply_multiplier",
    "multiplier_symbol",
    "vertical_kernel_apply",
    "kernel_pair",
    "kernel_tail_bound",
    "poisson_profile",
    "poisson_boundary_ext",
    "riesz_symbol",
]


class KernelKind(enum.Enum):
    U = "U"
    Vplus = "Vplus"
    Vminus = "Vminus"
    Wplus = "Wplus"
    Wminus = "Wminus"
    T = "T"


_MULTIPLIER_KINDS = ("riesz_axis1", "riesz_axis2", "abs_grad_pow", "heat", "heat_phi1", "poisson")


@dataclass(frozen=True)
class MultiplierSpec:
    """
    A horizontal Fourier multiplier.

    ``param`` is the exponent for ``abs_grad_pow``, the time for ``heat`` and
    ``heat_phi1`` and the height for ``poisson``; it is ignored by the Riesz
    transforms.
    """

    kind: str
    param: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _MULTIPLIER_KINDS:
            raise ValueError(f"unknown multiplier kind {self.kind!r}")
        if self.kind in ("heat", "heat_phi1") and not self.param >= 0:
            raise ValueError(f"{self.kind} requires t >= 0, got {self.param!r}")
        if self.kind == "poisson" and not self.param >= 0:
            raise ValueError(f"poisson requires x3 >= 0, got {self.param!r}")

    @classmethod
    def riesz(cls, axis: int) -> "MultiplierSpec":
        if axis not in (1, 2):
            raise ValueError("Riesz axis must be 1 or 2")
        return cls(f"riesz_axis{axis}")

    @classmethod
    def abs_grad_pow(cls, s: float) -> "MultiplierSpec":
        return cls("abs_grad_pow", float(s))

    @classmethod
    def heat(cls, t: float) -> "MultiplierSpec":
        return cls("heat", float(t))

    @classmethod
    def heat_phi1(cls, t: float) -> "MultiplierSpec":
        return cls("heat_phi1", float(t))

    @classmethod
    def poisson(cls, x3: float) -> "MultiplierSpec":
        return cls("poisson", float(x3))


def riesz_symbol(grid: GridSpec, axis: int) -> np.ndarray:
    """``i xi_axis / |xi_h|`` with zero on the mean mode and the Nyquist lines."""
    xi = grid.xi1 if axis == 1 else grid.xi2
    b = grid.xi_abs
    out = np.zeros(b.shape, dtype=complex)
    nz = (b > 0) & grid.odd_mask
    out[nz] = 1j * xi[nz] / b[nz]
    return out


def multiplier_symbol(grid: GridSpec, m: MultiplierSpec) -> np.ndarray:
    """Per-mode symbol of ``m`` on the half-plane, shape ``(N, N//2+1)``."""
    b = grid.xi_abs
    if m.kind == "riesz_axis1":
        return riesz_symbol(grid, 1)
    if m.kind == "riesz_axis2":
        return riesz_symbol(grid, 2)
    if m.kind == "abs_grad_pow":
        out = np.zeros_like(b)
        nz = b > 0
        out[nz] = b[nz] ** m.param
        if m.param == 0:
            out[~nz] = 1.0
        return out
    if m.kind == "heat":
        return np.exp(-m.param * b**2)
    if m.kind == "heat_phi1":
        z = m.param * b**2
        out = np.full_like(b, m.param)
        nz = z > 0
        out[nz] = -np.expm1(-z[nz]) / b[nz] ** 2
        return out
    return np.exp(-m.param * b)


def apply_multiplier(f: SpectralField, m: MultiplierSpec) -> SpectralField:
    """
    Multiply every horizontal mode of ``f`` by the symbol of ``m``.

    Raises
    ------
    ValueError
        For ``abs_grad_pow(s)`` with ``s < 0`` when the mean mode is nonzero.
    """
    if m.kind == "abs_grad_pow" and m.param < 0 and np.any(f.coeffs[:, 0, 0] != 0):
        raise ValueError("singular mode: abs_grad_pow with negative exponent on a field with nonzero mean")
    return f * multiplier_symbol(f.grid, m)


@dataclass(frozen=True)
class KernelPair:
    """Causal and anti-causal integrals of one field; every kernel is a combination."""

    grid: GridSpec
    causal: np.ndarray
    anticausal: np.ndarray

    def trace_term(self) -> np.ndarray:
        """``T f``: the Poisson profile scaled by ``(A f)(0)``."""
        return poisson_profile(self.grid) * self.anticausal[0]

    def combine(self, kind: KernelKind) -> np.ndarray:
        C, A = self.causal, self.anticausal
        if kind is KernelKind.U:
            return C.copy()
        T = self.trace_term()
        if kind is KernelKind.T:
            return T
        if kind is KernelKind.Wplus:
            return 0.5 * (C + A + T)
        if kind is KernelKind.Wminus:
            return 0.5 * (C + A - T)
        if kind is KernelKind.Vplus:
            return 0.5 * (C - A + T)
        if kind is KernelKind.Vminus:
            return 0.5 * (C - A - T)
        raise ValueError(f"unknown kernel {kind!r}")


def kernel_pair(f: SpectralField) -> KernelPair:
    q = kernel_quadrature(f.grid)
    return KernelPair(f.grid, q.causal(f.coeffs), q.anticausal(f.coeffs))


def poisson_profile(grid: GridSpec) -> np.ndarray:
    """``exp(-x3 |xi_h|)`` on every node and mode, shape ``(M, N, N//2+1)``."""
    return np.exp(-grid.x3[:, None, None] * grid.xi_abs[None])


def kernel_tail_bound(f: SpectralField) -> np.ndarray:
    """Per-mode bound ``max_x3 |f| * exp(-b Z)`` on the mass cut off at the top."""
    g = f.grid
    return np.abs(f.coeffs).max(axis=0) * np.exp(-g.xi_abs * g.Z)


def vertical_kernel_apply(f: SpectralField, k: KernelKind | str, with_tail: bool = False):
    """
    Apply one of the vertical kernels ``U, V±, W±, T`` mode by mode.

    Parameters
    ----------
    f : SpectralField
    k : KernelKind or its tag
    with_tail : bool
        Also return :func:`kernel_tail_bound` of ``f``.

    Returns
    -------
    SpectralField, or (SpectralField, ndarray) when ``with_tail``.
    """
    kind = KernelKind(k) if not isinstance(k, KernelKind) else k
    out = SpectralField(f.grid, kernel_pair(f).combine(kind))
    if with_tail:
        return out, kernel_tail_bound(f)
    return out


def poisson_boundary_ext(g, grid: GridSpec | None = None) -> SpectralField:
    """
    Harmonic extension ``exp(-x3 |xi_h|) g`` of boundary data into the half-space.

    ``g`` is either a 2D coefficient slice (``grid`` required) or a
    :class:`SpectralField`, in which case its ``x3 = 0`` level is used.
    """
    if isinstance(g, SpectralField):
        grid, g = g.grid, g.coeffs[0]
    if grid is None:
        raise ValueError("a grid is required for a bare coefficient slice")
    g = np.asarray(g)
    if g.shape != grid.spectral_shape[1:]:
        raise ValueError(f"boundary slice shape {g.shape} does not match {grid.spectral_shape[1:]}")
    return SpectralField(grid, poisson_profile(grid) * g[None])
