"""
Divergence-free initial data vanishing on the wall.

Velocities are the discrete curl of a vector potential ``psi``, using the same
spectral horizontal and finite-difference vertical derivatives as
:func:`anisolab.stokes.check_div`, so the discrete divergence vanishes to
rounding.  Every potential carries the vertical profile ``x3^2 e^{-x3}``
corrected at the first interior node so that its discrete ``d/dx3`` is zero on
the wall; the velocity then vanishes at ``x3 = 0`` exactly.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, SpectralField, VectorField, horizontal_derivative, to_physical
from .vertical import derivative_matrix, vertical_derivative

__all__ = ["PROFILES", "make_divfree_ic", "wall_profile"]

PROFILES = ("gaussian_bump", "shear_roll")


def wall_profile(grid: GridSpec, width: float = 1.0) -> np.ndarray:
    """``(x3/width)^2 exp(-x3/width)`` with zero discrete slope at ``x3 = 0``."""
    s = grid.x3 / width
    theta = s**2 * np.exp(-s)
    D = derivative_matrix(grid.M, grid.dz, grid.vertical_order).toarray()
    theta[1] -= (D[0] @ theta) / D[0, 1]
    return theta


def _curl(psi) -> tuple[SpectralField, SpectralField, SpectralField]:
    p1, p2, p3 = psi
    u1 = horizontal_derivative(p3, 2) - vertical_derivative(p2)
    u2 = vertical_derivative(p1) - horizontal_derivative(p3, 1)
    u3 = horizontal_derivative(p2, 1) - horizontal_derivative(p1, 2)
    return u1, u2, u3


def _gaussian_modes(grid: GridSpec, rng: np.random.Generator, sigma: float) -> np.ndarray:
    """Fourier coefficients of a unit-height Gaussian at a random centre."""
    centre = rng.uniform(0.0, grid.L, size=2)
    b2 = grid.xi_abs**2
    phase = np.exp(-1j * (grid.xi1 * centre[0] + grid.xi2 * centre[1]))
    c = (2 * np.pi * sigma**2 / grid.L**2) * np.exp(-0.5 * sigma**2 * b2) * phase
    return c * grid.odd_mask


def make_divfree_ic(grid: GridSpec, seed: int, amplitude: float, profile: str = "gaussian_bump",
                    width: float = 1.0) -> VectorField:
    """
    Seeded divergence-free velocity with ``u(., x3 = 0) = 0``.

    Parameters
    ----------
    grid : GridSpec
    seed : int
        Seed of the centre and the potential weights (``gaussian_bump``).
    amplitude : float
        Largest pointwise value of any component; ``0`` gives the zero field.
    profile : {"gaussian_bump", "shear_roll"}
        ``gaussian_bump``: the curl of three Gaussian-times-``x3^2 e^{-x3}``
        potentials with random weights.  ``shear_roll``: the curl of
        ``(0, 0, sin(2 pi x1 / L) x3^2 e^{-x3})``, a purely horizontal flow.
    width : float
        Horizontal Gaussian width and vertical length scale.

    Notes
    -----
    The ``X^s`` size of the result is :func:`anisolab.lp_besov.xs_norm`; the
    integrator compares it with its smallness threshold.
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    if not amplitude >= 0:
        raise ValueError(f"amplitude must be nonnegative, got {amplitude!r}")
    if amplitude == 0:
        return VectorField.zeros(grid)
    theta = wall_profile(grid, width)[:, None, None]
    shape = grid.spectral_shape
    if profile == "shear_roll":
        c = np.zeros(shape, dtype=complex)
        c[:, 1, 0] = -0.5j * theta[:, 0, 0]
        c[:, -1, 0] = 0.5j * theta[:, 0, 0]
        psi = (grid.zeros(), grid.zeros(), SpectralField(grid, c))
        u = _curl(psi)
    else:
        rng = np.random.default_rng(seed)
        modes = _gaussian_modes(grid, rng, width)
        weights = rng.normal(size=3)
        weights /= np.linalg.norm(weights)
        psi = tuple(SpectralField(grid, w * theta * modes[None]) for w in weights)
        u = _curl(psi)
    peak = max(float(np.abs(to_physical(c).values).max()) for c in u)
    scale = amplitude / peak
    return VectorField(tuple(c * scale for c in u), divergence_free=True)
