"""
Decay-rate experiments: rate table, log-log fits, campaigns and operator bounds.

Rates are positive numbers ``r`` such that a norm behaves like ``t^{-r}``;
fitted slopes are therefore compared as ``|slope + r| <= tolerance``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, SpectralField, VectorField, _hermitian_project, horizontal_derivative, make_grid, to_physical
from .initial_data import _curl, make_divfree_ic, wall_profile
from .lp_besov import INF, NormSpec, _horizontal_lp, build_partition
from .mild import IntegratorConfig, NormSeries, energy_ledger, integrate, record_norm
from .operators import KernelKind, MultiplierSpec, kernel_pair, multiplier_symbol, riesz_symbol
from .stokes import check_bc, check_div, stokes_evolve
from .vertical import trapezoid_weights

__all__ = [
    "RateQuery",
    "FitResult",
    "theoretical_exponent",
    "fit_exponent",
    "run_linear_campaign",
    "run_nonlinear_campaign",
    "verify_operator_bounds",
    "random_band_limited",
    "random_divfree",
    "grade_series",
    "log_times",
    "OPERATOR_BOUNDS",
    "DEFAULT_WINDOW",
    "DEFAULT_TOLERANCE",
]

DEFAULT_WINDOW = (5.0, 50.0)
DEFAULT_TOLERANCE = 0.15
OPERATOR_BOUNDS = {
    "S": 4.0, "U": 2.0, "Vplus": 4.0, "Vminus": 4.0, "Wplus": 4.0, "Wminus": 4.0, "T": 4.0,
    "heat": 4.0, "stokes": 4.0,
}


def _inv(r: float) -> float:
    return 0.0 if r == INF else 1.0 / r


@dataclass(frozen=True)
class RateQuery:
    """
    One decay rate: a component, mixed-norm exponents and derivative counts.

    ``alpha = (alpha_h, alpha_3)``; vertical queries must have ``alpha_3 = 0``.
    """

    component: str
    p: float
    q: float
    alpha: tuple[int, int] = (0, 0)
    regime: str = "large_t"

    def __post_init__(self) -> None:
        if self.component not in ("horizontal", "vertical"):
            raise ValueError(f"component must be horizontal or vertical, got {self.component!r}")
        if self.regime not in ("near_t0", "large_t"):
            raise ValueError(f"regime must be near_t0 or large_t, got {self.regime!r}")
        for v in (self.p, self.q):
            if not 1.0 <= float(v) <= INF:
                raise ValueError(f"exponents must lie in [1, inf], got {v!r}")
        a = tuple(int(x) for x in self.alpha)
        if len(a) != 2 or min(a) < 0 or sum(a) > 1:
            raise ValueError(f"alpha must satisfy |alpha| <= 1, got {self.alpha!r}")
        if self.component == "vertical" and a[1] != 0:
            raise ValueError("vertical rates are stated for horizontal derivatives only (alpha_3 = 0)")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))

    @property
    def label(self) -> str:
        fmt = lambda r: "inf" if r == INF else f"{r:g}"  # noqa: E731
        return f"{self.component}:p={fmt(self.p)}:q={fmt(self.q)}:a={self.alpha[0]}{self.alpha[1]}"

    def norm_spec(self) -> NormSpec:
        return NormSpec(self.p, self.q, alpha=self.alpha)


def theoretical_exponent(rq: RateQuery) -> float | None:
    """
    Decay rate from the rate table, or ``None`` when the case is not covered.

    Horizontal: ``(1 - 1/p) + |alpha_h|/2``; vertical adds ``(1 - 1/q)/2``.
    For ``p, q >= 2`` both regimes are covered.  Otherwise the horizontal
    estimate holds for ``t >= 1`` only (``near_t0`` is not covered) and
    needs a positive rate when ``p < 2``; the vertical estimate holds for
    all ``t > 0`` and needs a positive rate when ``p, q < 2``.
    """
    ah = rq.alpha[0]
    base = (1.0 - _inv(rq.p)) + 0.5 * ah
    if rq.component == "vertical":
        rate = base + 0.5 * (1.0 - _inv(rq.q))
        if rq.p < 2 and rq.q < 2 and not rate > 0:
            return None
        return rate
    if rq.p >= 2 and rq.q >= 2:
        return base
    if rq.regime == "near_t0":
        return None
    if rq.p < 2 and not base > 0:
        return None
    return base


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    n_samples: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "window": list(self.window), "n_samples": self.n_samples}


MIN_FIT_SAMPLES = 8


def fit_exponent(series, t0: float, t1: float) -> FitResult:
    """
    Least-squares fit of ``log v = intercept + slope * log t`` on ``t0 <= t <= t1``.

    ``series`` is a :class:`NormSeries` or a pair of arrays ``(t, v)``.  The
    slope is computed from mantissas and integer binary exponents of ``v``
    separately, so rescaling by a power of two leaves it bit-identical.

    Raises
    ------
    ValueError
        Fewer than 8 samples in the window, nonpositive values or ``t0 >= t1``.
    """
    if not t0 < t1:
        raise ValueError("fit window needs t0 < t1")
    t, v = series.as_arrays() if isinstance(series, NormSeries) else map(np.asarray, series)
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    sel = (t >= t0) & (t <= t1)
    t, v = t[sel], v[sel]
    if t.size < MIN_FIT_SAMPLES:
        raise ValueError(f"fit needs at least {MIN_FIT_SAMPLES} samples in [{t0}, {t1}], got {t.size}")
    if np.any(t <= 0):
        raise ValueError("fit times must be positive")
    if not np.all(v > 0):
        raise ValueError("fit values must be positive")
    x = np.log(t)
    xc = x - x.mean()
    a = xc / np.dot(xc, xc)
    mant, expo = np.frexp(v)
    ym = np.log(mant)
    de = (expo - expo[0]).astype(float)
    slope = float(np.dot(a, ym) + math.log(2.0) * np.dot(a, de))
    y = np.log(v)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - float(np.sum(resid**2)) / ss_tot))
    return FitResult(slope, intercept, r2, (float(t0), float(t1)), int(t.size))


def grade_series(query: RateQuery, series: NormSeries, window, tolerance: float = DEFAULT_TOLERANCE) -> dict:
    """Fit ``series`` over ``window`` and compare with the rate of ``query``."""
    rate = theoretical_exponent(query)
    entry = {"query": query.label, "component": query.component, "p": query.p, "q": query.q,
             "alpha": list(query.alpha), "theoretical": rate, "tolerance": tolerance}
    if rate is None:
        entry.update(status="not_covered", passed=None)
        return entry
    if all(v == 0 for v in series.values):
        entry.update(status="zero_field", passed=None)
        return entry
    fit = fit_exponent(series, *window)
    entry.update(fit=fit.to_dict(), fitted=fit.slope, status="fitted",
                 passed=bool(abs(fit.slope + rate) <= tolerance))
    return entry


def _as_grid(grid_cfg) -> GridSpec:
    if isinstance(grid_cfg, GridSpec):
        return grid_cfg
    return make_grid(**grid_cfg)


def log_times(window, n: int) -> np.ndarray:
    return np.geomspace(window[0], window[1], n)


def run_linear_campaign(grid_cfg, rate_queries, window=DEFAULT_WINDOW, *, seed: int = 0,
                        amplitude: float = 1.0, profile: str = "gaussian_bump", n_times: int = 16,
                        tolerance: float = DEFAULT_TOLERANCE, width: float = 1.0, times=None) -> dict:
    """
    Evolve a seeded divergence-free field with the exact Stokes flow and fit rates.

    Samples are taken at ``n_times`` log-spaced times over ``window`` unless
    explicit ``times`` are given.

    Returns
    -------
    dict
        ``queries`` (one graded entry per query), ``series`` (``NormSeries``
        per query), ``residuals`` (maximal ``check_div`` / ``check_bc``) and
        the ``times`` used.
    """
    grid = _as_grid(grid_cfg)
    t1 = window[1]
    if t1 > (grid.L / 8) ** 2:
        raise ValueError(f"fit window ends at {t1}, after the box-saturation time {(grid.L / 8) ** 2}")
    u0 = make_divfree_ic(grid, seed, amplitude, profile, width)
    queries = list(rate_queries)
    series = [NormSeries(q.component, q.norm_spec()) for q in queries]
    times = log_times(window, n_times) if times is None else np.asarray(times, dtype=float)
    div_max = bc_max = 0.0
    for t in times:
        u = stokes_evolve(u0, float(t))
        if not u.is_zero():
            div_max = max(div_max, check_div(u))
            bc_max = max(bc_max, check_bc(u))
        for q, s in zip(queries, series):
            s.append(t, record_norm(u, q.component, s.spec))
    graded = [grade_series(q, s, window, tolerance) for q, s in zip(queries, series)]
    return {"kind": "linear", "queries": graded, "series": series, "times": [float(t) for t in times],
            "residuals": {"div_max": div_max, "bc_max": bc_max},
            "passed": all(e["passed"] is not False for e in graded)}


def run_nonlinear_campaign(grid_cfg, cfg: IntegratorConfig, rate_queries, window=DEFAULT_WINDOW, *,
                           seed: int = 0, amplitude: float = 1e-3, profile: str = "gaussian_bump",
                           tolerance: float = DEFAULT_TOLERANCE, width: float = 1.0,
                           residual_tol: float = 1e-5, energy_tol: float | None = None,
                           keep_states: bool = False) -> dict:
    """
    Integrate the nonlinear system and fit rates, with ledger and boundedness checks.

    The boundedness check compares ``sup_t ||u_h||_{L^1}`` and
    ``sup_t ||u_3||_{L^1_1}`` (Chemin-Lerner, ``sigma = 1``) with twice their
    initial values.  Only the final state is retained unless
    ``keep_states``.  The energy-ledger defect is always reported and is
    graded only when ``energy_tol`` is given, since at large ``dt`` it is
    dominated by the trapezoid rule in time.  Blow-up propagates as
    :class:`anisolab.mild.BlowUpError`.
    """
    grid = _as_grid(grid_cfg)
    u0 = make_divfree_ic(grid, seed, amplitude, profile, width)
    queries = list(rate_queries)
    extra = [("horizontal", NormSpec(1.0, 1.0)), ("vertical", NormSpec(1.0, 1.0, 1.0))]
    specs = [(q.component, q.norm_spec()) for q in queries] + extra
    traj, series = integrate(u0, cfg, specs, partition=build_partition(grid), keep_states=keep_states)
    qseries, (uh_l1, u3_cl) = series[:len(queries)], series[len(queries):]
    graded = [grade_series(q, s, window, tolerance) for q, s in zip(queries, qseries)]
    div_max = max((m.get("div", 0.0) for m in traj.step_meta), default=0.0)
    bc_max = max((m.get("bc", 0.0) for m in traj.step_meta), default=0.0)
    defect = energy_ledger(traj)

    def growth(s):
        v0 = s.values[0]
        return 0.0 if v0 == 0 else max(s.values) / v0

    bounded = {"uh_L1_growth": growth(uh_l1), "u3_CL11_growth": growth(u3_cl)}
    checks = {
        "rates": all(e["passed"] is not False for e in graded),
        "div": div_max < residual_tol,
        "bc": bc_max < residual_tol,
        "energy": True if energy_tol is None else defect < energy_tol,
        "bounded": all(g <= 2.0 for g in bounded.values()),
    }
    return {"kind": "nonlinear", "queries": graded, "series": qseries, "boundedness_series": [uh_l1, u3_cl],
            "residuals": {"div_max": div_max, "bc_max": bc_max}, "energy_defect": defect,
            "boundedness": bounded, "checks": checks, "passed": all(checks.values()),
            "trajectory": traj}


# -- operator bounds -----------------------------------------------------------

def random_band_limited(grid: GridSpec, rng: np.random.Generator, kmax: int | None = None) -> SpectralField:
    """Random real field with horizontal modes ``|k_i| <= kmax`` and a decaying smooth profile."""
    kmax = grid.N // 4 if kmax is None else kmax
    shape = grid.spectral_shape
    band = (np.abs(grid.k1)[:, None] <= kmax) & (grid.k2[None, :] <= kmax) & grid.odd_mask
    c = np.zeros(shape, dtype=complex)
    x = grid.x3
    nterms = 3
    for _ in range(nterms):
        a = rng.uniform(0.3, 2.0)
        n = rng.integers(0, 3)
        prof = (x * a) ** n * np.exp(-a * x)
        coef = (rng.normal(size=band.shape) + 1j * rng.normal(size=band.shape)) * band
        c += prof[:, None, None] * coef[None]
    c[:, 0, 0] = c[:, 0, 0].real
    return SpectralField(grid, _hermitian_project(c, grid.N))


def random_divfree(grid: GridSpec, rng: np.random.Generator, kmax: int | None = None) -> VectorField:
    """Curl of a random band-limited potential with the wall profile, hence admissible data."""
    theta = wall_profile(grid, rng.uniform(0.7, 1.5))[:, None, None]
    psi = []
    for _ in range(3):
        f = random_band_limited(grid, rng, kmax)
        top = f.coeffs[min(1, grid.M - 1)]
        psi.append(SpectralField(grid, theta * top[None]))
    return VectorField(_curl(psi), divergence_free=True)


def _shell_table(comps, part) -> np.ndarray:
    """``||Delta_j f||_{L^q L^p}`` indexed ``[j, ip, iq]`` for ``p, q`` in (1, 2, inf)."""
    grid = comps[0].grid
    w = trapezoid_weights(grid.M, grid.dz)
    exps = (1.0, 2.0, INF)
    out = np.zeros((len(part.shells), 3, 3))
    for n, j in enumerate(part.shells):
        sym = part.block_symbol(j)
        acc = None
        for c in comps:
            v = to_physical(c * sym).values
            acc = v * v if acc is None else acc + v * v
        mag = np.sqrt(acc)
        for ip, p in enumerate(exps):
            h = _horizontal_lp(mag, p, grid.dx)
            for iq, q in enumerate(exps):
                if q == INF:
                    out[n, ip, iq] = h.max()
                elif q == 1:
                    out[n, ip, iq] = np.dot(w, h)
                else:
                    out[n, ip, iq] = math.sqrt(np.dot(w, h * h))
    return out


def _cl_from_table(table: np.ndarray, sigma: float) -> np.ndarray:
    """Chemin-Lerner norms ``[ip, iq]`` from a shell table."""
    if sigma == INF:
        return table.max(axis=0)
    return (np.sum(table**sigma, axis=0)) ** (1.0 / sigma)


_SIGMAS = (1.0, 2.0, INF)
_EXPS = (1.0, 2.0, INF)


def _same_space_ratio(tin: np.ndarray, tout: np.ndarray) -> float:
    best = 0.0
    for s in _SIGMAS:
        a, b = _cl_from_table(tin, s), _cl_from_table(tout, s)
        ok = a > 1e-300
        if np.any(ok):
            best = max(best, float(np.max(b[ok] / a[ok])))
    return best


def _heat_ratio(tin: np.ndarray, tout: dict, t: float) -> float:
    """``t^{(1/p - 1/q) + a/2} ||grad^a e^{t Dh} f||_{L^{q,r}} / ||f||_{L^{p,r}}`` maximised."""
    best = 0.0
    for s in _SIGMAS:
        a = _cl_from_table(tin, s)
        for ah, tab in tout.items():
            b = _cl_from_table(tab, s)
            for ip, p in enumerate(_EXPS):
                for iq, q in enumerate(_EXPS):
                    if q < p:
                        continue
                    weight = t ** ((_inv(p) - _inv(q)) + 0.5 * ah)
                    for ir in range(3):
                        if a[ip, ir] > 1e-300:
                            best = max(best, weight * float(b[iq, ir] / a[ip, ir]))
    return best


HEAT_TIMES = (0.1, 1.0, 10.0)


def verify_operator_bounds(seed: int = 0, trials: int = 100, grid: GridSpec | None = None,
                           bounds: dict | None = None) -> dict:
    """
    Maximal Chemin-Lerner ratios of the half-space operators over random fields.

    For ``S`` (as the vector ``(S1 f, S2 f)``), ``U``, ``V±``, ``W±`` and
    ``T`` the ratio is ``||K f||_{L^{p,q}_sigma} / ||f||_{L^{p,q}_sigma}``
    over ``p, q, sigma`` in ``{1, 2, inf}``.  For the heat flow at three times
    it is the weighted ``L^p -> L^q`` ratio of the smoothing estimate with
    ``|alpha_h| <= 1``, and for the Stokes flow ``e^{-tA}`` the same-space
    ratio on divergence-free data.

    Returns
    -------
    dict
        ``{name: {"max_ratio", "bound", "passed"}}`` plus ``"passed"``.

    Raises
    ------
    ValueError
        If ``trials < 20``.
    """
    if trials < 20:
        raise ValueError("verify_operator_bounds needs at least 20 trials")
    grid = grid if grid is not None else make_grid(16.0, 32, 8.0, 33)
    bounds = dict(OPERATOR_BOUNDS if bounds is None else bounds)
    part = build_partition(grid)
    rng = np.random.default_rng(seed)
    S1, S2 = riesz_symbol(grid, 1), riesz_symbol(grid, 2)
    heat = {t: multiplier_symbol(grid, MultiplierSpec.heat(t)) for t in HEAT_TIMES}
    ratios = {name: 0.0 for name in bounds}
    for _ in range(trials):
        f = random_band_limited(grid, rng)
        tin = _shell_table([f], part)
        if not np.any(tin):
            continue
        ratios["S"] = max(ratios["S"], _same_space_ratio(tin, _shell_table([f * S1, f * S2], part)))
        kp = kernel_pair(f)
        for kind in KernelKind:
            out = SpectralField(grid, kp.combine(kind))
            ratios[kind.value] = max(ratios[kind.value], _same_space_ratio(tin, _shell_table([out], part)))
        for t, h in heat.items():
            ft = f * h
            tout = {0: _shell_table([ft], part),
                    1: _shell_table([horizontal_derivative(ft, 1), horizontal_derivative(ft, 2)], part)}
            ratios["heat"] = max(ratios["heat"], _heat_ratio(tin, tout, t))
        u = random_divfree(grid, rng)
        uin = _shell_table(list(u), part)
        for t in HEAT_TIMES:
            ratios["stokes"] = max(ratios["stokes"],
                                   _same_space_ratio(uin, _shell_table(list(stokes_evolve(u, t, tol=None)), part)))
    table = {name: {"max_ratio": ratios[name], "bound": bounds[name], "passed": ratios[name] <= bounds[name]}
             for name in bounds}
    table["passed"] = all(v["passed"] for v in table.values() if isinstance(v, dict))
    return table
