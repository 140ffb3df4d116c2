import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from anisolab import KernelKind, MultiplierSpec, SpectralField, apply_multiplier, make_grid
from anisolab import poisson_boundary_ext, vertical_kernel_apply
from anisolab.operators import kernel_pair, multiplier_symbol, riesz_symbol

# Closed forms for g(y) = exp(-a y) on [0, Z] at a single mode b = |xi_h|:
#   U g(x) = b (e^{-a x} - e^{-b x}) / (b - a)
#   A g(x) = b (e^{-a x} - e^{b x - (a + b) Z}) / (a + b)       (anti-causal part)
#   T g(x) = b e^{-b x} (1 - e^{-(a + b) Z}) / (a + b)
# Values at a = 0.7, b = 0.75, x = 2, Z = 8, frozen from the formulas above.
U_AT_2 = 0.35200205689764974
A_AT_2 = 0.12752890571709372
T_AT_2 = 0.11541109392300275
W_ONE_AT_2 = 1.7657608433133278  # W 1 = 2 - e^{-b x} - e^{-b (Z - x)}


@pytest.fixture(scope="module")
def oracle_grid():
    # xi = k / 4, so mode (3, 0) has b = 0.75; x3 = 2 is node 32.
    return make_grid(L=8 * np.pi, N=16, Z=8.0, M=129)


def _closed_forms(g, a):
    x = g.x3[:, None, None]
    b = g.xi_abs[None]
    with np.errstate(divide="ignore", invalid="ignore"):
        C = np.where(np.isclose(b, a), b * x * np.exp(-a * x), b * (np.exp(-a * x) - np.exp(-b * x)) / (b - a))
    A = b * (np.exp(-a * x) - np.exp(b * x - (a + b) * g.Z)) / (a + b)
    T = np.exp(-b * x) * b * (1 - np.exp(-(a + b) * g.Z)) / (a + b)
    return C, A, T


class TestMultipliers:
    def test_riesz_square_sum(self, small_grid):
        s = riesz_symbol(small_grid, 1) ** 2 + riesz_symbol(small_grid, 2) ** 2
        nz = (small_grid.xi_abs > 0) & small_grid.odd_mask
        np.testing.assert_allclose(s[nz], -1.0)
        assert s[0, 0] == 0

    def test_phi1_value_and_limit(self, small_grid):
        P = multiplier_symbol(small_grid, MultiplierSpec.heat_phi1(0.3))
        assert P[0, 0] == 0.3
        k = np.unravel_index(np.argmin(np.abs(small_grid.xi_abs - np.sqrt(2.0))), P.shape)
        b2 = small_grid.xi_abs[k] ** 2
        assert P[k] == pytest.approx(-np.expm1(-0.3 * b2) / b2, rel=1e-14)

    def test_phi1_is_time_integral_of_heat(self, small_grid):
        t = np.linspace(0, 0.7, 2001)
        heat = np.array([multiplier_symbol(small_grid, MultiplierSpec.heat(s)) for s in t])
        integral = scipy.integrate.trapezoid(heat, t, axis=0)
        np.testing.assert_allclose(multiplier_symbol(small_grid, MultiplierSpec.heat_phi1(0.7)), integral, atol=1e-6)

    def test_heat_semigroup(self, small_grid):
        h = lambda t: multiplier_symbol(small_grid, MultiplierSpec.heat(t))  # noqa: E731
        np.testing.assert_allclose(h(0.2) * h(0.5), h(0.7), rtol=1e-13)

    def test_negative_power_on_mean(self, small_grid):
        c = np.zeros(small_grid.spectral_shape, complex)
        c[:, 0, 0] = 1.0
        with pytest.raises(ValueError, match="singular"):
            apply_multiplier(SpectralField(small_grid, c), MultiplierSpec.abs_grad_pow(-1.0))

    def test_abs_grad_zero_power_is_identity(self, divfree_u):
        f = divfree_u.u1
        np.testing.assert_array_equal(apply_multiplier(f, MultiplierSpec.abs_grad_pow(0.0)).coeffs, f.coeffs)

    @pytest.mark.parametrize("bad", [MultiplierSpec.heat, MultiplierSpec.heat_phi1, MultiplierSpec.poisson])
    def test_negative_time_rejected(self, bad):
        with pytest.raises(ValueError):
            bad(-1.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            MultiplierSpec("laplace")
        with pytest.raises(ValueError):
            MultiplierSpec.riesz(3)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.0, 5.0), st.floats(0.0, 5.0))
    def test_poisson_composition(self, s, t):
        g = make_grid(2 * np.pi, 8, 1.0, 4)
        P = lambda x: multiplier_symbol(g, MultiplierSpec.poisson(x))  # noqa: E731
        np.testing.assert_allclose(P(s) * P(t), P(s + t), rtol=1e-12)


class TestVerticalKernels:
    def _exp_field(self, g, a):
        c = np.exp(-a * g.x3)[:, None, None] * np.ones(g.spectral_shape[1:])[None]
        return SpectralField(g, c.astype(complex))

    def test_frozen_point_values(self, oracle_grid):
        g = oracle_grid
        pair = kernel_pair(self._exp_field(g, 0.7))
        m, k = 32, (3, 0)
        assert g.x3[m] == 2.0 and g.xi_abs[k] == 0.75
        assert pair.causal[m][k].real == pytest.approx(U_AT_2, abs=1e-10)
        assert pair.anticausal[m][k].real == pytest.approx(A_AT_2, abs=1e-10)
        assert pair.trace_term()[m][k].real == pytest.approx(T_AT_2, abs=1e-10)

    def test_w_on_constant(self, oracle_grid):
        g = oracle_grid
        pair = kernel_pair(self._exp_field(g, 0.0))
        assert (pair.causal + pair.anticausal)[32][3, 0].real == pytest.approx(W_ONE_AT_2, abs=1e-10)

    @pytest.mark.parametrize("kind", list(KernelKind))
    @pytest.mark.parametrize("a", [0.3, 0.7, 1.5])
    def test_closed_forms(self, oracle_grid, kind, a):
        g = oracle_grid
        C, A, T = _closed_forms(g, a)
        ref = {
            KernelKind.U: C, KernelKind.T: T,
            KernelKind.Wplus: 0.5 * (C + A + T), KernelKind.Wminus: 0.5 * (C + A - T),
            KernelKind.Vplus: 0.5 * (C - A + T), KernelKind.Vminus: 0.5 * (C - A - T),
        }[kind]
        band = g.xi_abs <= 2.0
        out = vertical_kernel_apply(self._exp_field(g, a), kind).coeffs
        assert np.max(np.abs(out - ref)[:, band]) < 1e-8

    def test_tag_and_tail(self, oracle_grid):
        f = self._exp_field(oracle_grid, 0.7)
        out, tail = vertical_kernel_apply(f, "U", with_tail=True)
        np.testing.assert_array_equal(out.coeffs, vertical_kernel_apply(f, KernelKind.U).coeffs)
        np.testing.assert_allclose(tail, np.exp(-oracle_grid.xi_abs * oracle_grid.Z))

    def test_linear_in_input(self, small_grid, rng):
        a = SpectralField(small_grid, rng.normal(size=small_grid.spectral_shape) + 0j)
        b = SpectralField(small_grid, rng.normal(size=small_grid.spectral_shape) + 0j)
        lhs = vertical_kernel_apply(a * 2.0 + b, KernelKind.Vplus).coeffs
        rhs = 2 * vertical_kernel_apply(a, KernelKind.Vplus).coeffs + vertical_kernel_apply(b, KernelKind.Vplus).coeffs
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestPoissonExtension:
    def test_profile(self, small_grid, rng):
        g2 = rng.normal(size=small_grid.spectral_shape[1:]) + 0j
        ext = poisson_boundary_ext(g2, small_grid)
        np.testing.assert_allclose(ext.coeffs[0], g2)
        np.testing.assert_allclose(ext.coeffs[5], np.exp(-small_grid.x3[5] * small_grid.xi_abs) * g2)

    def test_from_field_uses_wall_level(self, divfree_u):
        f = divfree_u.u1
        np.testing.assert_array_equal(poisson_boundary_ext(f).coeffs, poisson_boundary_ext(f.coeffs[0], f.grid).coeffs)

    def test_errors(self, small_grid):
        with pytest.raises(ValueError):
            poisson_boundary_ext(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            poisson_boundary_ext(np.zeros((3, 3)), small_grid)


class TestSpecExamples:
    def test_heat_at_zero_is_identity(self, divfree_u):
        f = divfree_u.u1
        np.testing.assert_array_equal(apply_multiplier(f, MultiplierSpec.heat(0.0)).coeffs, f.coeffs)

    def test_riesz_maps_sine_to_cosine(self):
        from anisolab import PhysicalField, to_physical, to_spectral

        g = make_grid(2 * np.pi, 16, 1.0, 4)
        v = np.sin(2 * g.xh)[None, :, None] * np.ones(g.physical_shape)
        out = to_physical(apply_multiplier(to_spectral(PhysicalField(g, v)), MultiplierSpec.riesz(1))).values
        np.testing.assert_allclose(out, np.cos(2 * g.xh)[None, :, None] * np.ones(g.physical_shape), atol=1e-13)

    @pytest.mark.parametrize("kind", list(KernelKind))
    def test_mean_mode_is_annihilated(self, small_grid, rng, kind):
        c = np.zeros(small_grid.spectral_shape, complex)
        c[:, 0, 0] = rng.normal(size=small_grid.M)
        assert np.abs(vertical_kernel_apply(SpectralField(small_grid, c), kind).coeffs).max() == 0.0

    @pytest.mark.parametrize("kind", list(KernelKind))
    def test_zero_field(self, small_grid, kind):
        assert vertical_kernel_apply(small_grid.zeros(), kind).is_zero()

    def test_trace_term_is_poisson_profile(self, oracle_grid, rng):
        g = oracle_grid
        f = SpectralField(g, rng.normal(size=g.spectral_shape) * np.exp(-g.x3)[:, None, None] + 0j)
        pair = kernel_pair(f)
        out = vertical_kernel_apply(f, KernelKind.T).coeffs
        expected = np.exp(-g.x3[:, None, None] * g.xi_abs[None]) * pair.anticausal[0][None]
        assert np.abs(out - expected).max() < 1e-10 * max(np.abs(expected).max(), 1.0)

    @pytest.mark.parametrize("M", [65, 129])
    def test_poisson_extension_is_harmonic(self, M):
        """Second differences of the extension match b^2 times it up to O(dz^2)."""
        g = make_grid(2 * np.pi, 8, 4.0, M)
        ext = poisson_boundary_ext(np.ones(g.spectral_shape[1:], complex), g).coeffs
        d2 = (ext[2:] - 2 * ext[1:-1] + ext[:-2]) / g.dz**2
        res = np.abs(d2 - g.xi_abs[None] ** 2 * ext[1:-1]).max()
        bound = g.xi_abs.max() ** 4 * g.dz**2 / 12
        assert res <= 1.01 * bound

    def test_zero_boundary_data(self, small_grid):
        assert poisson_boundary_ext(np.zeros(small_grid.spectral_shape[1:]), small_grid).is_zero()
