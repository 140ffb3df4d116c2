"""
Horizontal Littlewood-Paley blocks and anisotropic norms.

The radial profiles are

    chi(r) = psi((r - 3/4) / (4/3 - 3/4)),    phi(r) = chi(r / 2) - chi(r)

with ``psi`` the smooth step built from ``exp(-1/x)``, so ``supp chi`` is the
ball of radius 4/3, ``chi = 1`` for ``r <= 3/4`` and ``phi`` is supported in
``3/4 <= r <= 8/3``.  Blocks are ``Delta_j f = phi(2^{-j} |xi_h|) f``.

Mixed norms ``L^q_{x3} L^p_{xh}`` are evaluated on the grid: an inner
Riemann sum times ``(L/N)^2`` on each level and an outer trapezoid in ``x3``;
an exponent ``inf`` is a grid maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import GridSpec, PhysicalField, SpectralField, VectorField, horizontal_derivative, to_physical, to_spectral
from .vertical import trapezoid_weights, vertical_derivative

__all__ = [
    "smooth_step",
    "chi_profile",
    "phi_profile",
    "DyadicPartition",
    "NormSpec",
    "NormValue",
    "build_partition",
    "dyadic_block",
    "low_frequency_remainder",
    "mixed_norm",
    "chemin_lerner_norm",
    "evaluate_norm",
    "xs_norm",
    "verify_bernstein",
    "derivative_fields",
    "shell_norms",
    "hs_norm",
    "run_lp_checks",
]

INF = math.inf


def _inv(r: float) -> float:
    return 0.0 if r == INF else 1.0 / r


def smooth_step(x):
    """``1`` for ``x <= 0``, ``0`` for ``x >= 1``, smooth in between."""
    x = np.asarray(x, dtype=float)

    def g(y):
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = np.exp(-1.0 / y[pos])
        return out

    a, b = g(1.0 - x), g(x)
    return a / (a + b)


def chi_profile(r):
    return smooth_step((np.asarray(r, dtype=float) - 0.75) / (4.0 / 3.0 - 0.75))


def phi_profile(r):
    r = np.asarray(r, dtype=float)
    return chi_profile(r / 2.0) - chi_profile(r)


@dataclass(frozen=True)
class DyadicPartition:
    """
    Littlewood-Paley partition resolvable on one grid.

    The profiles are replaceable so that fault-injection checks can pass a
    corrupted ``phi``.
    """

    grid: GridSpec
    j_min: int
    j_max: int
    chi: Callable = field(default=chi_profile, repr=False)
    phi: Callable = field(default=phi_profile, repr=False)

    @property
    def shells(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def block_symbol(self, j: int) -> np.ndarray:
        if j not in self.shells:
            raise ValueError(f"shell {j} outside the resolved range [{self.j_min}, {self.j_max}]")
        return self.phi(self.grid.xi_abs / 2.0**j)

    def low_symbol(self) -> np.ndarray:
        """Symbol of ``S_{j_min}``, the mass below the lowest shell."""
        return self.chi(self.grid.xi_abs / 2.0**self.j_min)

    def unity_defect(self) -> float:
        """``max |sum_j phi(2^{-j} xi) - 1|`` over the nonzero grid modes."""
        total = sum(self.block_symbol(j) for j in self.shells)
        nz = self.grid.xi_abs > 0
        return float(np.abs(total[nz] - 1.0).max())


def build_partition(grid: GridSpec, chi: Callable = chi_profile, phi: Callable = phi_profile) -> DyadicPartition:
    """Shells ``j_min = floor(log2(2 pi / L)) - 1`` to ``j_max = ceil(log2 xi_max) + 1``."""
    j_min = math.floor(math.log2(grid.xi_min)) - 1
    j_max = math.ceil(math.log2(grid.xi_max)) + 1
    if j_max - j_min + 1 < 2:
        raise ValueError("grid too coarse to host two dyadic shells")
    return DyadicPartition(grid, j_min, j_max, chi, phi)


def _partition_for(grid: GridSpec, partition: DyadicPartition | None) -> DyadicPartition:
    if partition is None:
        return build_partition(grid)
    if partition.grid != grid:
        raise ValueError("partition was built for a different grid")
    return partition


def dyadic_block(f: SpectralField, j: int, partition: DyadicPartition | None = None) -> SpectralField:
    """``Delta_j f``; the vertical variable is untouched."""
    part = _partition_for(f.grid, partition)
    return f * part.block_symbol(j)


def low_frequency_remainder(f: SpectralField, partition: DyadicPartition | None = None) -> SpectralField:
    """``S_{j_min} f``: what the resolved shells cannot see (only the mean mode on a torus)."""
    part = _partition_for(f.grid, partition)
    return f * part.low_symbol()


@dataclass(frozen=True)
class NormSpec:
    """
    Exponents of a mixed or Chemin-Lerner norm.

    ``sigma = None`` selects the plain mixed norm ``L^q_{x3} L^p_{xh}``.
    ``alpha = (alpha_h, alpha_3)`` counts horizontal and vertical derivatives;
    ``alpha_h = 1`` measures the horizontal gradient as a vector.
    """

    p: float
    q: float
    sigma: float | None = None
    s: float | None = None
    alpha: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        for name in ("p", "q", "sigma"):
            v = getattr(self, name)
            if v is None and name == "sigma":
                continue
            if not (1.0 <= float(v) <= INF):
                raise ValueError(f"{name} must lie in [1, inf], got {v!r}")
        a = tuple(int(x) for x in self.alpha)
        if len(a) != 2 or min(a) < 0:
            raise ValueError(f"alpha must be a pair of nonnegative integers, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)


@dataclass(frozen=True)
class NormValue:
    value: float
    spec: NormSpec

    def __post_init__(self) -> None:
        if not (np.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"norm value must be finite and nonnegative, got {self.value!r}")

    def __float__(self) -> float:
        return float(self.value)


def _components(f) -> tuple[SpectralField, ...]:
    if isinstance(f, VectorField):
        return tuple(f)
    if isinstance(f, SpectralField):
        return (f,)
    return tuple(f)


def derivative_fields(f, alpha: tuple[int, int] = (0, 0)) -> tuple[SpectralField, ...]:
    """
    Components of ``grad_h^{alpha_h} d3^{alpha_3} f``.

    ``alpha_h`` counts full horizontal gradients, each doubling the number of
    components; the mixed norm measures the pointwise Euclidean magnitude.
    """
    comps = _components(f)
    ah, a3 = alpha
    if a3:
        comps = tuple(vertical_derivative(c, a3) for c in comps)
    for _ in range(ah):
        comps = tuple(horizontal_derivative(c, ax) for c in comps for ax in (1, 2))
    return comps


def _horizontal_lp(v: np.ndarray, p: float, dx: float) -> np.ndarray:
    """Per-level horizontal ``L^p`` of nonnegative samples ``v[m, i1, i2]``."""
    if p == INF:
        return v.max(axis=(1, 2))
    if p == 1:
        return v.sum(axis=(1, 2)) * dx**2
    if p == 2:
        return np.sqrt(np.sum(v * v, axis=(1, 2)) * dx**2)
    return (np.sum(v**p, axis=(1, 2)) * dx**2) ** (1.0 / p)


def _vertical_lq(g: np.ndarray, q: float, grid: GridSpec) -> float:
    if q == INF:
        return float(g.max())
    w = trapezoid_weights(grid.M, grid.dz)
    if q == 1:
        return float(np.dot(w, g))
    return float(np.dot(w, g**q) ** (1.0 / q))


def _magnitude(comps: Sequence[SpectralField]) -> np.ndarray:
    if len(comps) == 1:
        return np.abs(to_physical(comps[0]).values)
    acc = None
    for c in comps:
        v = to_physical(c).values
        acc = v * v if acc is None else acc + v * v
    return np.sqrt(acc)


def _mixed(comps: Sequence[SpectralField], p: float, q: float) -> float:
    grid = comps[0].grid
    if all(c.is_zero() for c in comps):
        return 0.0
    return _vertical_lq(_horizontal_lp(_magnitude(comps), p, grid.dx), q, grid)


def mixed_norm(f, p: float, q: float) -> NormValue:
    """
    ``||f||_{L^q_{x3} L^p_{xh}}`` of a scalar or (pointwise Euclidean) vector field.

    Examples
    --------
    A constant ``c >= 0`` gives ``c * L^(2/p) * Z^(1/q)``.
    """
    spec = NormSpec(p, q)
    return NormValue(_mixed(_components(f), float(p), float(q)), spec)


def _lsigma(values: np.ndarray, sigma: float) -> float:
    if values.size == 0:
        return 0.0
    if sigma == INF:
        return float(values.max())
    if sigma == 1:
        return float(values.sum())
    return float(np.sum(values**sigma) ** (1.0 / sigma))


def shell_norms(f, p: float, q: float, partition: DyadicPartition | None = None) -> np.ndarray:
    """``||Delta_j f||_{L^q L^p}`` for every resolved shell ``j``."""
    comps = _components(f)
    part = _partition_for(comps[0].grid, partition)
    out = []
    for j in part.shells:
        sym = part.block_symbol(j)
        out.append(_mixed([c * sym for c in comps], p, q))
    return np.array(out)


def chemin_lerner_norm(f, p: float, q: float, sigma: float,
                       partition: DyadicPartition | None = None) -> NormValue:
    """``ell^sigma`` over the resolved shells of ``||Delta_j f||_{L^q_{x3} L^p_{xh}}``."""
    spec = NormSpec(p, q, sigma)
    return NormValue(_lsigma(shell_norms(f, float(p), float(q), partition), float(sigma)), spec)


def evaluate_norm(f, spec: NormSpec, partition: DyadicPartition | None = None) -> NormValue:
    """Mixed or Chemin-Lerner norm of ``grad_h^{alpha_h} d3^{alpha_3} f`` per ``spec``."""
    comps = derivative_fields(f, spec.alpha)
    if spec.sigma is None:
        return NormValue(_mixed(comps, spec.p, spec.q), spec)
    return NormValue(_lsigma(shell_norms(comps, spec.p, spec.q, partition), spec.sigma), spec)


def _multi_indices(k: int):
    for b1 in range(k + 1):
        for b2 in range(k + 1 - b1):
            yield b1, b2, k - b1 - b2


def _l2sq(c: SpectralField) -> float:
    g = c.grid
    per_level = np.sum(g.half_plane_weight * np.abs(c.coeffs) ** 2, axis=(1, 2))
    return float(g.L**2 * np.dot(trapezoid_weights(g.M, g.dz), per_level))


def hs_norm(f, s: int) -> float:
    """``(sum_{k<=s} ||grad^k f||_2^2)^{1/2}`` with ``grad^k`` the full derivative tensor."""
    total = 0.0
    for comp in _components(f):
        g = comp.grid
        d3 = [comp]
        for _ in range(s):
            d3.append(vertical_derivative(d3[-1]))
        for k in range(s + 1):
            for b1, b2, b3 in _multi_indices(k):
                weight = math.factorial(k) // (math.factorial(b1) * math.factorial(b2) * math.factorial(b3))
                sym = (1j * g.xi1 * g.odd_mask) ** b1 * (1j * g.xi2 * g.odd_mask) ** b2
                total += weight * _l2sq(d3[b3] * sym)
    return math.sqrt(total)


def xs_norm(u, s: int, partition: DyadicPartition | None = None) -> NormValue:
    """
    ``||u||_{H^s} + sum_{a=0,1} (||d3^a u||_{L^{1,1}_inf} + ||d3^a u||_{L^{1,inf}_inf})``.

    Chemin-Lerner terms use the pointwise magnitude of the vector.

    Raises
    ------
    ValueError
        If ``s`` is negative or ``s`` vertical derivatives do not fit the grid.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    comps = _components(u)
    grid = comps[0].grid
    if grid.vertical_order + s > grid.M:
        raise ValueError(f"s = {s} exceeds the resolvable vertical smoothness on M = {grid.M}")
    part = _partition_for(grid, partition)
    value = hs_norm(comps, s)
    for a3 in (0, 1):
        d = derivative_fields(comps, (0, a3))
        value += _lsigma(shell_norms(d, 1.0, 1.0, part), INF)
        value += _lsigma(shell_norms(d, 1.0, INF, part), INF)
    return NormValue(value, NormSpec(1.0, 1.0, INF, float(s)))


def verify_bernstein(f: SpectralField, j: int, alpha: tuple[int, int], p: float, q: float,
                     partition: DyadicPartition | None = None, tol: float = 1e-10) -> float:
    """
    ``max_m ||d^alpha f(., x3_m)||_{L^q} / (2^{j(|alpha| + 2(1/p - 1/q))} ||f(., x3_m)||_{L^p})``.

    ``alpha = (a1, a2)`` are horizontal derivative orders.  ``f`` must be
    supported in the annulus where ``phi(2^{-j} .)`` is nonzero; levels where
    ``f`` vanishes are skipped.

    Raises
    ------
    ValueError
        If ``f`` has coefficients outside the annulus of shell ``j``.
    """
    part = _partition_for(f.grid, partition)
    outside = part.block_symbol(j) == 0
    if np.abs(f.coeffs[:, outside]).max(initial=0.0) > tol * max(np.abs(f.coeffs).max(), 1e-300):
        raise ValueError(f"field is not supported in shell {j}")
    a1, a2 = alpha
    g = f.grid
    df = f
    for _ in range(a1):
        df = horizontal_derivative(df, 1)
    for _ in range(a2):
        df = horizontal_derivative(df, 2)
    num = _horizontal_lp(np.abs(to_physical(df).values), float(q), g.dx)
    den = _horizontal_lp(np.abs(to_physical(f).values), float(p), g.dx)
    scale = 2.0 ** (j * (a1 + a2 + 2 * (_inv(p) - _inv(q))))
    ok = den > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(num[ok] / (scale * den[ok])))


# -- regression suite ----------------------------------------------------------

BERNSTEIN_CASES = (((0, 0), 2.0, 2.0), ((1, 0), 2.0, 2.0), ((0, 0), 2.0, INF), ((0, 0), 1.0, INF),
                   ((1, 0), 2.0, INF), ((0, 0), 1.0, 2.0))
HEAT_SMOOTHING = (1.05, 0.5)
# |xi| <= 8/3 * 2^j on a shell bounds every tested ratio (the first-derivative L^2 case is the sharp one)
BERNSTEIN_BOUND = 8.0 / 3.0


def _fmt(r: float) -> str:
    return "inf" if r == INF else f"{r:g}"


def _random_real(grid: GridSpec, rng: np.random.Generator, levels: int = 2) -> SpectralField:
    v = np.zeros(grid.physical_shape)
    v[:levels] = rng.normal(size=(levels, grid.N, grid.N))
    return to_spectral(PhysicalField(grid, v))


def run_lp_checks(grid: GridSpec, partition: DyadicPartition | None = None, seed: int = 0,
                  samples: int = 8, bernstein_bound: float | None = None) -> list[dict]:
    """
    Partition, support, almost-orthogonality, Bernstein and heat-smoothing checks.

    Each entry is ``{"check", "value", "bound", "passed"}``; Bernstein and
    heat-smoothing entries carry the maximum over shells and random samples.
    """
    part = _partition_for(grid, partition)
    rows = []

    def add(name, value, bound, passed=None):
        ok = value <= bound if passed is None else passed
        rows.append({"check": name, "value": float(value), "bound": float(bound), "passed": bool(ok)})

    add("partition_of_unity", part.unity_defect(), 1e-8)
    b = grid.xi_abs
    sym = {j: part.block_symbol(j) for j in part.shells}
    range_err = max(max(0.0, float(-s.min()), float(s.max() - 1.0)) for s in sym.values())
    add("profile_range", range_err, 0.0)
    outside = 0.0
    for j, s in sym.items():
        r = b / 2.0**j
        mask = (r < 0.75 * (1 - 1e-12)) | (r > (8.0 / 3.0) * (1 + 1e-12))
        outside = max(outside, float(np.abs(s[mask]).max(initial=0.0)))
    add("shell_support", outside, 0.0)
    overlap = max((float(np.abs(sym[j] * sym[k]).max()) for j in sym for k in sym if abs(j - k) >= 2), default=0.0)
    add("almost_orthogonality", overlap, 0.0)

    rng = np.random.default_rng(seed)
    worst = {case: 0.0 for case in BERNSTEIN_CASES}
    heat_worst = 0.0
    C, c = HEAT_SMOOTHING
    for j in part.shells:
        if not np.any(sym[j]):
            continue
        for _ in range(samples):
            f = _random_real(grid, rng) * sym[j]
            if f.is_zero():
                continue
            for case in BERNSTEIN_CASES:
                alpha, p, q = case
                worst[case] = max(worst[case], verify_bernstein(f, j, alpha, p, q, part))
            for p in (1.0, 2.0, INF):
                base = _horizontal_lp(np.abs(to_physical(f).values[:2]), p, grid.dx)
                for s in (0.25, 1.0, 4.0):
                    t = s / 4.0**j
                    ft = f * np.exp(-t * b**2)
                    val = _horizontal_lp(np.abs(to_physical(ft).values[:2]), p, grid.dx)
                    ratio = float(np.max(val / (C * np.exp(-c * t * 4.0**j) * base)))
                    heat_worst = max(heat_worst, ratio)
    bound = BERNSTEIN_BOUND if bernstein_bound is None else bernstein_bound
    for (alpha, p, q), v in worst.items():
        add(f"bernstein_a{alpha[0]}{alpha[1]}_p{_fmt(p)}_q{_fmt(q)}", v, bound)
    add("heat_smoothing", heat_worst, 1.0)
    return rows
