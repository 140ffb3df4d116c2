"""
Mild-solution time stepping for the anisotropic Navier-Stokes system.

One step freezes the momentum flux ``f = -u (x) u`` and applies the exact
forced Stokes operator of :func:`anisolab.stokes.stokes_forced_step`
(exponential Euler).  Further Picard iterates re-evaluate the flux at the
midpoint ``(u + v) / 2``, which makes the step second order in ``dt``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import PhysicalField, SpectralField, VectorField, horizontal_derivative, to_physical, to_spectral
from .lp_besov import NormSpec, evaluate_norm, xs_norm
from .stokes import ForceTensor, check_bc, check_div, stokes_forced_step
from .vertical import apply_vertical, derivative_matrix, trapezoid_weights

__all__ = [
    "BlowUpError",
    "IntegratorConfig",
    "Trajectory",
    "NormSeries",
    "momentum_flux",
    "mild_step",
    "integrate",
    "energy_ledger",
    "pde_residual",
    "l2_energy",
    "dissipation_rate",
]

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 10.0
_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


class BlowUpError(RuntimeError):
    """Raised when a step or Picard iterate grows by more than ``BLOWUP_FACTOR``."""

    def __init__(self, message: str, trajectory=None, series=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.series = series


@dataclass(frozen=True)
class IntegratorConfig:
    """
    Fixed-step integrator settings.

    Parameters
    ----------
    dt : float
        Time step.
    t_max : float
        Horizon; the run takes ``round(t_max / dt)`` steps.
    picard_iters : int
        ``1`` is exponential Euler; each extra iterate is a midpoint correction.
    dealias : bool
        Apply the 2/3 mask to the flux.
    smallness_delta : float
        Threshold on ``xs_norm(u0, xs_order)``; exceeding it only warns.
    save_every : int
        Store the state and the requested norms every ``save_every`` steps.
    xs_order : int
        Sobolev index of the smallness check.
    """

    dt: float
    t_max: float
    picard_iters: int = 2
    dealias: bool = True
    smallness_delta: float = 1e-2
    save_every: int = 1
    xs_order: int = 2

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.t_max >= self.dt:
            raise ValueError(f"t_max must be at least dt, got {self.t_max!r}")
        if int(self.picard_iters) < 1:
            raise ValueError("picard_iters must be at least 1")
        if int(self.save_every) < 1:
            raise ValueError("save_every must be at least 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass
class NormSeries:
    """Samples ``(t, value)`` of one norm of one velocity component."""

    component: str
    spec: NormSpec
    times: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def append(self, t: float, value: float) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("norm series times must increase")
        if not value >= 0:
            raise ValueError("norm values must be nonnegative")
        self.times.append(float(t))
        self.values.append(float(value))

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.values))

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.times), np.asarray(self.values)


@dataclass
class Trajectory:
    """
    Saved states and per-step diagnostics of one run.

    ``step_meta[n]`` describes the step ending at ``diag_times[n + 1]``; the
    energy diagnostics ``energy`` and ``dissipation`` are sampled at every
    step so the ledger can integrate in time.
    """

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    step_meta: list = field(default_factory=list)
    diag_times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)

    def append_state(self, t: float, u: VectorField | None) -> None:
        """Record a save time; ``u`` is ``None`` when the state is not retained."""
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must increase")
        self.times.append(float(t))
        self.states.append(u)

    def state_at(self, t: float) -> tuple[int, VectorField]:
        idx = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if self.states[idx] is None:
            raise ValueError(f"state at t = {self.times[idx]} was not retained")
        return idx, self.states[idx]

    @property
    def final(self) -> VectorField | None:
        return self.states[-1] if self.states else None


def _component_view(u: VectorField, component: str):
    if component == "vertical":
        return u.u3
    if component == "horizontal":
        return (u.u1, u.u2)
    if component == "full":
        return u
    raise ValueError(f"unknown component {component!r}")


def record_norm(u: VectorField, component: str, spec: NormSpec, partition=None) -> float:
    return evaluate_norm(_component_view(u, component), spec, partition).value


def l2_energy(u: VectorField) -> float:
    """``||u||_2^2`` by horizontal Parseval and vertical trapezoid."""
    g = u.grid
    w = trapezoid_weights(g.M, g.dz)
    total = 0.0
    for c in u:
        total += float(np.dot(w, np.sum(g.half_plane_weight * np.abs(c.coeffs) ** 2, axis=(1, 2))))
    return total * g.L**2


def dissipation_rate(u: VectorField) -> float:
    """``||grad_h u||_2^2``."""
    g = u.grid
    w = trapezoid_weights(g.M, g.dz)
    b2 = g.xi_abs**2 * g.odd_mask
    total = 0.0
    for c in u:
        total += float(np.dot(w, np.sum(g.half_plane_weight * b2 * np.abs(c.coeffs) ** 2, axis=(1, 2))))
    return total * g.L**2


def momentum_flux(u: VectorField, dealias: bool = True) -> ForceTensor:
    """
    ``f[k, l] = -u_k u_l`` formed in physical space.

    With ``dealias`` the velocity and the products are restricted to the
    2/3-rule modes.
    """
    g = u.grid
    mask = g.dealias_mask if dealias else None
    vals = [to_physical(c * mask if dealias else c).values for c in u]
    entries = []
    for k, l in _PAIRS:
        f = to_spectral(PhysicalField(g, -vals[k] * vals[l]))
        entries.append(f * mask if dealias else f)
    return ForceTensor(entries)


def _norm2(u: VectorField) -> float:
    return math.sqrt(l2_energy(u))


def mild_step(u: VectorField, cfg: IntegratorConfig) -> tuple[VectorField, dict]:
    """
    One step of length ``cfg.dt``.

    Returns
    -------
    v : VectorField
    meta : dict
        ``picard_iters`` and ``picard_residual``, the relative change of the
        last iterate.

    Raises
    ------
    BlowUpError
        If an iterate is more than ``BLOWUP_FACTOR`` times larger than ``u``.
    """
    if u.is_zero():
        return u, {"picard_iters": 0, "picard_residual": 0.0}
    base = _norm2(u)
    v = stokes_forced_step(u, momentum_flux(u, cfg.dealias), cfg.dt)
    residual = 0.0
    for _ in range(int(cfg.picard_iters) - 1):
        _check_growth(v, base)
        mid = (u + v) * 0.5
        w = stokes_forced_step(u, momentum_flux(mid, cfg.dealias), cfg.dt)
        residual = _norm2(w - v) / max(_norm2(w), 1e-300)
        v = w
    _check_growth(v, base)
    return v, {"picard_iters": int(cfg.picard_iters), "picard_residual": residual}


def _check_growth(v: VectorField, base: float) -> None:
    n = _norm2(v)
    if not np.isfinite(n) or n > BLOWUP_FACTOR * base:
        raise BlowUpError(f"velocity grew from {base:.3e} to {n:.3e} within one step")


def integrate(u0: VectorField, cfg: IntegratorConfig, norm_specs=(), partition=None,
              check_residuals: bool = True, keep_states: bool = True, on_save=None):
    """
    March ``u0`` to ``cfg.t_max`` with fixed steps.

    Parameters
    ----------
    u0 : VectorField
    cfg : IntegratorConfig
    norm_specs : sequence of (component, NormSpec)
        ``component`` is ``"horizontal"``, ``"vertical"`` or ``"full"``.
    partition : DyadicPartition, optional
        Reused for Chemin-Lerner norms.
    check_residuals : bool
        Record ``check_div``/``check_bc`` in ``step_meta`` at every save.
    keep_states : bool
        Retain every saved state; otherwise only the latest one is kept and
        earlier entries of ``states`` are ``None``.
    on_save : callable, optional
        Called as ``on_save(t, u)`` at every save, e.g. to write checkpoints.

    Returns
    -------
    Trajectory, list of NormSeries

    Raises
    ------
    BlowUpError
        Carries the partial trajectory and series.
    """
    if not u0.is_zero():
        size = xs_norm(u0, cfg.xs_order, partition).value
        if size > cfg.smallness_delta:
            warnings.warn(f"initial X^s norm {size:.3e} exceeds smallness_delta {cfg.smallness_delta:.3e}",
                          RuntimeWarning, stacklevel=2)
    series = [NormSeries(comp, spec) for comp, spec in norm_specs]
    traj = Trajectory()

    def save(t, u, n):
        if not keep_states and traj.states:
            traj.states[-1] = None
        traj.append_state(t, u)
        if on_save is not None:
            on_save(t, u)
        for s in series:
            s.append(t, record_norm(u, s.component, s.spec, partition))
        if check_residuals and n > 0:
            zero = u.is_zero()
            traj.step_meta[-1]["div"] = 0.0 if zero else check_div(u)
            traj.step_meta[-1]["bc"] = 0.0 if zero else check_bc(u)

    u = u0
    traj.diag_times.append(0.0)
    traj.energy.append(l2_energy(u))
    traj.dissipation.append(dissipation_rate(u))
    save(0.0, u, 0)
    for n in range(1, cfg.n_steps + 1):
        t = n * cfg.dt
        try:
            u, meta = mild_step(u, cfg)
        except BlowUpError as exc:
            exc.trajectory, exc.series = traj, series
            raise
        meta["t"] = t
        traj.step_meta.append(meta)
        traj.diag_times.append(t)
        traj.energy.append(l2_energy(u))
        traj.dissipation.append(dissipation_rate(u))
        if n % cfg.save_every == 0 or n == cfg.n_steps:
            save(t, u, n)
    return traj, series


def energy_ledger(traj: Trajectory) -> float:
    """
    ``max_t |E(t) + 2 int_0^t D - E(0)| / E(0)`` with ``E = ||u||^2``, ``D = ||grad_h u||^2``.

    The time integral is the trapezoid rule over the per-step diagnostics.
    """
    E = np.asarray(traj.energy)
    if E.size == 0 or E[0] == 0:
        return 0.0
    t = np.asarray(traj.diag_times)
    D = np.asarray(traj.dissipation)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (D[1:] + D[:-1]))])
    return float(np.max(np.abs(E + 2 * integral - E[0])) / E[0])


def _d3(grid, a):
    return apply_vertical(derivative_matrix(grid.M, grid.dz, grid.vertical_order), a)


def _curl(grid, comps):
    d = lambda c, ax: c * (1j * (grid.xi1 if ax == 1 else grid.xi2) * grid.odd_mask)  # noqa: E731
    a1, a2, a3 = comps
    return [d(a3, 2) - _d3(grid, a2), _d3(grid, a1) - d(a3, 1), d(a2, 1) - d(a1, 2)]


def _advection(u: VectorField) -> list[np.ndarray]:
    """``(u . grad) u`` in spectral space (dealiased products)."""
    g = u.grid
    mask = g.dealias_mask
    vals = [to_physical(c * mask).values for c in u]
    out = []
    for c in u:
        cm = c * mask
        grads = [horizontal_derivative(cm, 1), horizontal_derivative(cm, 2), SpectralField(g, _d3(g, cm.coeffs))]
        adv = sum(vals[j] * to_physical(grads[j]).values for j in range(3))
        out.append(to_spectral(PhysicalField(g, adv)).coeffs * mask)
    return out


def _l2(grid, comps) -> float:
    w = trapezoid_weights(grid.M, grid.dz)
    return math.sqrt(grid.L**2 * sum(
        float(np.dot(w, np.sum(grid.half_plane_weight * np.abs(c) ** 2, axis=(1, 2)))) for c in comps))


def pde_residual(traj: Trajectory, t: float) -> float:
    """
    Relative residual of the momentum equation at a saved interior time.

    Gradients (the pressure) are removed by taking the curl, so the measured
    quantity is

        ||curl(dt u - Dh u + (u . grad) u)|| /
        (||curl dt u|| + ||curl Dh u|| + ||curl (u . grad) u||)

    with ``dt u`` the central difference of the neighbouring saved states.

    Raises
    ------
    ValueError
        If ``t`` is the first or last saved time, or the neighbours are not
        equally spaced.
    """
    idx, u = traj.state_at(t)
    if idx == 0 or idx == len(traj.times) - 1:
        raise ValueError("pde_residual needs a saved time strictly inside the trajectory")
    tm, t0, tp = traj.times[idx - 1], traj.times[idx], traj.times[idx + 1]
    if not math.isclose(t0 - tm, tp - t0, rel_tol=1e-9):
        raise ValueError("neighbouring saved states are not equally spaced")
    if traj.states[idx - 1] is None or traj.states[idx + 1] is None:
        raise ValueError("pde_residual needs the neighbouring states; integrate with keep_states=True")
    if u.is_zero() and traj.states[idx - 1].is_zero() and traj.states[idx + 1].is_zero():
        return 0.0
    g = u.grid
    h = tp - t0
    dudt = [(a.coeffs - b.coeffs) / (2 * h) for a, b in zip(traj.states[idx + 1], traj.states[idx - 1])]
    lap = [-(g.xi_abs**2) * c.coeffs for c in u]
    adv = _advection(u)
    terms = [_curl(g, dudt), _curl(g, [-x for x in lap]), _curl(g, adv)]
    total = [a + b + c for a, b, c in zip(*terms)]
    den = sum(_l2(g, tm_) for tm_ in terms)
    return _l2(g, total) / max(den, 1e-300)
