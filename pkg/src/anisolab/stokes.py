"""
Anisotropic Stokes flow on the half-space.

The unforced solution is

    u3(t) = U e^{t Dh} (u0_3 - S . u0_h)
    u_k(t) = e^{t Dh} (u0_k + S_k u0_3) - S_k U e^{t Dh} (u0_3 - S . u0_h)

and a force ``div f`` held constant over a step adds the Duhamel terms below,
each of whose time integrals is the ``heat_phi1`` multiplier.  Derivatives in
``x3`` use the finite differences of :mod:`anisolab.vertical`; everything else
is exact per mode.
"""

from __future__ import annotations

import numpy as np

from .grid import SpectralField, VectorField, horizontal_derivative
from .operators import (
    KernelKind,
    MultiplierSpec,
    kernel_pair,
    multiplier_symbol,
    poisson_profile,
    riesz_symbol,
)
from .vertical import apply_vertical, derivative_matrix

__all__ = [
    "ForceTensor",
    "stokes_evolve",
    "stokes_forced_step",
    "check_div",
    "check_bc",
    "divergence",
    "PreconditionError",
]

_EPS = 1e-300
_INDEX = {(0, 0): 0, (1, 1): 1, (2, 2): 2, (0, 1): 3, (0, 2): 4, (1, 2): 5}


class PreconditionError(ValueError):
    """Input violates a solver precondition; ``residuals`` holds the measurements."""

    def __init__(self, message: str, residuals: dict):
        super().__init__(f"{message}: {residuals}")
        self.residuals = residuals


class ForceTensor:
    """
    Symmetric tensor ``f[k, l]`` of spectral fields (indices 0-based).

    Only the six independent entries are stored; ``f[k, l]`` and ``f[l, k]``
    return the same object.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        entries = tuple(entries)
        if len(entries) != 6:
            raise ValueError("a symmetric 3x3 tensor has six independent entries")
        g = entries[0].grid
        if any(e.grid != g for e in entries):
            raise ValueError("tensor entries live on different grids")
        self._entries = entries

    @classmethod
    def from_matrix(cls, rows) -> "ForceTensor":
        """Build from a 3x3 nested sequence; rejects any asymmetric pair."""
        for k in range(3):
            for l in range(k + 1, 3):
                a, b = rows[k][l], rows[l][k]
                if a is not b and not np.array_equal(a.coeffs, b.coeffs):
                    raise ValueError(f"force tensor is not symmetric in ({k + 1}, {l + 1})")
        return cls(rows[k][l] for (k, l) in sorted(_INDEX, key=_INDEX.get))

    @classmethod
    def zeros(cls, grid) -> "ForceTensor":
        z = grid.zeros()
        return cls((z,) * 6)

    @property
    def grid(self):
        return self._entries[0].grid

    def __getitem__(self, kl) -> SpectralField:
        k, l = kl
        return self._entries[_INDEX[(min(k, l), max(k, l))]]

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self._entries)


def _d3(grid, a: np.ndarray) -> np.ndarray:
    return apply_vertical(derivative_matrix(grid.M, grid.dz, grid.vertical_order), a)


def divergence(u: VectorField) -> SpectralField:
    """``d1 u1 + d2 u2 + d3 u3`` with spectral horizontal and FD vertical derivatives."""
    g = u.grid
    c = horizontal_derivative(u.u1, 1).coeffs + horizontal_derivative(u.u2, 2).coeffs + _d3(g, u.u3.coeffs)
    return SpectralField(g, c)


def _l2sq(grid, c: np.ndarray) -> float:
    """Discrete ``L^2`` mass of spectral coefficients (horizontal Parseval, vertical trapezoid)."""
    w = np.full(grid.M, grid.dz)
    w[0] = w[-1] = 0.5 * grid.dz
    per_level = np.sum(grid.half_plane_weight * np.abs(c) ** 2, axis=(1, 2))
    return float(grid.L**2 * np.dot(w, per_level))


def check_div(u: VectorField) -> float:
    """``||div u||_2 / max(||grad u||_2, eps)``."""
    g = u.grid
    grad = 0.0
    for comp in u:
        grad += _l2sq(g, horizontal_derivative(comp, 1).coeffs)
        grad += _l2sq(g, horizontal_derivative(comp, 2).coeffs)
        grad += _l2sq(g, _d3(g, comp.coeffs))
    return float(np.sqrt(_l2sq(g, divergence(u).coeffs)) / max(np.sqrt(grad), _EPS))


def check_bc(u: VectorField) -> float:
    """``||u(., 0)||_2 / max(||u||_2, eps)`` (wall trace against the bulk)."""
    g = u.grid
    wall = sum(float(np.sum(g.half_plane_weight * np.abs(c.coeffs[0]) ** 2)) for c in u) * g.L**2
    bulk = sum(_l2sq(g, c.coeffs) for c in u)
    return float(np.sqrt(wall) / max(np.sqrt(bulk), _EPS))


def _linear_part(u0: VectorField, heat: np.ndarray):
    g = u0.grid
    S1, S2 = riesz_symbol(g, 1), riesz_symbol(g, 2)
    h1, h2, h3 = (heat * c.coeffs for c in u0)
    w = SpectralField(g, h3 - S1 * h1 - S2 * h2)
    Uw = kernel_pair(w).causal
    return [h1 + S1 * h3 - S1 * Uw, h2 + S2 * h3 - S2 * Uw, Uw]


def stokes_evolve(u0: VectorField, t: float, tol: float | None = 1e-6) -> VectorField:
    """
    Unforced Stokes flow ``e^{-tA} u0``.

    Parameters
    ----------
    u0 : VectorField
        Divergence-free, vanishing at ``x3 = 0``.
    t : float
        Elapsed time, ``t >= 0``.
    tol : float or None
        Precondition tolerance on :func:`check_div` and :func:`check_bc`;
        ``None`` skips the check.

    Raises
    ------
    PreconditionError
        If the residuals of ``u0`` exceed ``tol``.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    if tol is not None and not u0.is_zero():
        res = {"div": check_div(u0), "bc": check_bc(u0)}
        if res["div"] > tol or res["bc"] > tol:
            raise PreconditionError("stokes_evolve needs divergence-free data vanishing at the wall", res)
    heat = multiplier_symbol(u0.grid, MultiplierSpec.heat(t))
    comps = _linear_part(u0, heat)
    return VectorField(tuple(SpectralField(u0.grid, c) for c in comps), divergence_free=True)


def stokes_forced_step(u0: VectorField, f: ForceTensor, dt: float) -> VectorField:
    """
    Advance ``u0`` by ``dt`` under the constant force ``div f``.

    Every Duhamel integral is the ``heat_phi1(dt)`` multiplier.  With
    ``b = |xi_h|``, ``S_k = i xi_k / b``, ``P = phi1(dt)`` the increments are

        u3 += -V+ P sum_{l,m<=2} d_l S_m f_lm - (V- + T) P b f33
              + (W - 1 - T) P sum_l d_l f3l + e^{-x3 b} P sum_l d_l f3l(x3=0)
        uk += P sum_m d_m f_km + W+ P d_k sum S_l S_m f_lm
              - S_k (V - T) P sum_l d_l f3l - (1 - T - W-) P d_k f33
              - S_k e^{-x3 b} P sum_l d_l f3l(x3=0)

    Raises
    ------
    ValueError
        If ``f`` is not a :class:`ForceTensor` (asymmetric input is rejected
        by :meth:`ForceTensor.from_matrix`).
    """
    if not isinstance(f, ForceTensor):
        raise ValueError("force must be a symmetric ForceTensor")
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt!r}")
    g = u0.grid
    heat = multiplier_symbol(g, MultiplierSpec.heat(dt))
    out = _linear_part(u0, heat)
    if f.is_zero():
        return VectorField(tuple(SpectralField(g, c) for c in out), divergence_free=True)

    P = multiplier_symbol(g, MultiplierSpec.heat_phi1(dt))
    b = g.xi_abs
    mask = g.odd_mask
    D = (1j * g.xi1 * mask, 1j * g.xi2 * mask)
    S = (riesz_symbol(g, 1), riesz_symbol(g, 2))
    F = [[f[k, l].coeffs for l in range(3)] for k in range(3)]

    hh_dS = sum(D[l] * S[m] * F[l][m] for l in range(2) for m in range(2))
    hh_SS = sum(S[l] * S[m] * F[l][m] for l in range(2) for m in range(2))
    div3 = D[0] * F[2][0] + D[1] * F[2][1]
    Pdiv3 = P * div3
    Pf33 = P * F[2][2]
    wall = poisson_profile(g) * Pdiv3[0][None]

    k_hh = kernel_pair(SpectralField(g, P * hh_dS))
    k33 = kernel_pair(SpectralField(g, Pf33))
    k3 = kernel_pair(SpectralField(g, Pdiv3))
    k_ss = kernel_pair(SpectralField(g, P * hh_SS))
    T33 = k33.trace_term()
    T3 = k3.trace_term()

    out[2] = out[2] + (
        -k_hh.combine(KernelKind.Vplus)
        - b * (k33.combine(KernelKind.Vminus) + T33)
        + (k3.causal + k3.anticausal - Pdiv3 - T3)
        + wall
    )
    V_minus_T3 = k3.causal - k3.anticausal - T3
    Wm33 = k33.combine(KernelKind.Wminus)
    Wp_ss = k_ss.combine(KernelKind.Wplus)
    for k in range(2):
        flux = P * (D[0] * F[k][0] + D[1] * F[k][1]) + _d3(g, P * F[k][2])
        out[k] = out[k] + (
            flux
            + D[k] * Wp_ss
            - S[k] * V_minus_T3
            - D[k] * (Pf33 - T33 - Wm33)
            - S[k] * wall
        )
    return VectorField(tuple(SpectralField(g, c) for c in out), divergence_free=True)
