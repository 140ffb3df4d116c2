"""
Pseudo-spectral simulator and verification lab for anisotropic Navier-Stokes flow on a half-space.

Horizontal directions are periodic with Fourier coefficients on every vertical
node; only horizontal viscosity acts.  The Stokes solution operator is applied
through explicit Fourier multipliers and vertical exponential kernels, and the
nonlinear problem is marched in mild (Duhamel) form.
"""

from .decay import (
    FitResult,
    RateQuery,
    fit_exponent,
    run_linear_campaign,
    run_nonlinear_campaign,
    theoretical_exponent,
    verify_operator_bounds,
)
from .grid import (
    GridSpec,
    PhysicalField,
    SpectralField,
    VectorField,
    horizontal_derivative,
    make_grid,
    to_physical,
    to_spectral,
)
from .initial_data import make_divfree_ic
from .lp_besov import (
    DyadicPartition,
    NormSpec,
    NormValue,
    build_partition,
    chemin_lerner_norm,
    dyadic_block,
    mixed_norm,
    verify_bernstein,
    xs_norm,
)
from .mild import (
    BlowUpError,
    IntegratorConfig,
    NormSeries,
    Trajectory,
    energy_ledger,
    integrate,
    mild_step,
    momentum_flux,
    pde_residual,
)
from .operators import (
    KernelKind,
    MultiplierSpec,
    apply_multiplier,
    poisson_boundary_ext,
    vertical_kernel_apply,
)
from .stokes import ForceTensor, check_bc, check_div, stokes_evolve, stokes_forced_step

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "DyadicPartition",
    "FitResult",
    "ForceTensor",
    "GridSpec",
    "IntegratorConfig",
    "KernelKind",
    "MultiplierSpec",
    "NormSeries",
    "NormSpec",
    "NormValue",
    "PhysicalField",
    "RateQuery",
    "SpectralField",
    "Trajectory",
    "VectorField",
    "apply_multiplier",
    "build_partition",
    "chemin_lerner_norm",
    "check_bc",
    "check_div",
    "dyadic_block",
    "energy_ledger",
    "fit_exponent",
    "horizontal_derivative",
    "integrate",
    "make_divfree_ic",
    "make_grid",
    "mild_step",
    "mixed_norm",
    "momentum_flux",
    "pde_residual",
    "poisson_boundary_ext",
    "run_linear_campaign",
    "run_nonlinear_campaign",
    "stokes_evolve",
    "stokes_forced_step",
    "theoretical_exponent",
    "to_physical",
    "to_spectral",
    "verify_bernstein",
    "verify_operator_bounds",
    "vertical_kernel_apply",
    "xs_norm",
]
