import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisolab import NormSpec, PhysicalField, SpectralField, build_partition, chemin_lerner_norm, dyadic_block
from anisolab import make_grid, mixed_norm, to_spectral, verify_bernstein, xs_norm
from anisolab.lp_besov import (BERNSTEIN_BOUND, chi_profile, hs_norm, low_frequency_remainder, phi_profile,
                               run_lp_checks, shell_norms)

INF = math.inf


def _field(g, fn):
    x1 = g.xh[:, None]
    x2 = g.xh[None, :]
    v = np.stack([fn(x1, x2, z) * np.ones((g.N, g.N)) for z in g.x3])
    return to_spectral(PhysicalField(g, v))


class TestProfiles:
    @settings(max_examples=50)
    @given(st.floats(0.0, 10.0))
    def test_phi_support(self, r):
        v = float(phi_profile(r))
        if r <= 0.75 or r >= 8.0 / 3.0:
            assert v == 0.0
        assert 0.0 <= v <= 1.0

    @settings(max_examples=50)
    @given(st.floats(1e-3, 1e3))
    def test_dyadic_sum(self, r):
        j = np.arange(-14, 14)
        assert abs(float(np.sum(phi_profile(r / 2.0**j))) - 1.0) < 1e-12

    def test_chi_limits(self):
        assert chi_profile(0.5) == 1.0
        assert chi_profile(4.0 / 3.0) == 0.0


class TestPartition:
    @settings(max_examples=10, deadline=None)
    @given(st.floats(1.0, 100.0), st.sampled_from([8, 16, 32, 64]))
    def test_partition_of_unity(self, L, N):
        g = make_grid(L, N, 1.0, 4)
        assert build_partition(g).unity_defect() < 1e-8

    def test_blocks_reconstruct(self, divfree_u):
        f = divfree_u.u1
        part = build_partition(f.grid)
        total = sum((dyadic_block(f, j, part) for j in part.shells), low_frequency_remainder(f, part))
        np.testing.assert_allclose(total.coeffs, f.coeffs, atol=1e-14)

    def test_out_of_range_shell(self, small_grid):
        part = build_partition(small_grid)
        with pytest.raises(ValueError):
            dyadic_block(small_grid.zeros(), part.j_max + 1, part)

    def test_foreign_partition(self, small_grid):
        with pytest.raises(ValueError):
            dyadic_block(small_grid.zeros(), 0, build_partition(make_grid(8.0, 32, 8.0, 65)))

    def test_almost_orthogonality(self, divfree_u):
        """0 <= 1 - sum phi_j^2 <= 1/2 pointwise, so shell energies bracket the L^2 norm."""
        f = divfree_u.u2
        total = mixed_norm(f, 2, 2).value ** 2
        shells = np.sum(shell_norms(f, 2, 2) ** 2)
        assert 0.5 * total <= shells <= total * (1 + 1e-12)


class TestMixedNorms:
    @pytest.mark.parametrize("p,q", [(1, 1), (2, 2), (2, INF), (INF, 2), (INF, INF), (3, 1.5)])
    def test_constant(self, p, q):
        g = make_grid(3.0, 16, 2.0, 9)
        f = _field(g, lambda x1, x2, z: 1.5)
        expected = 1.5 * g.L ** (2 / p if p != INF else 0) * g.Z ** (1 / q if q != INF else 0)
        assert mixed_norm(f, p, q).value == pytest.approx(expected, rel=1e-12)

    def test_sine_l2(self):
        g = make_grid(2 * np.pi, 16, 2.0, 9)
        f = _field(g, lambda x1, x2, z: np.sin(x1))
        assert mixed_norm(f, 2, 2).value == pytest.approx(np.pi * np.sqrt(2) * np.sqrt(2.0), rel=1e-12)
        assert mixed_norm(f, INF, INF).value == pytest.approx(1.0, abs=1e-12)

    def test_vector_magnitude(self):
        g = make_grid(2 * np.pi, 16, 2.0, 9)
        a, b = _field(g, lambda *x: 3.0), _field(g, lambda *x: 4.0)
        assert mixed_norm((a, b), INF, INF).value == pytest.approx(5.0)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32), st.sampled_from([1.0, 2.0, 4.0, INF]), st.sampled_from([1.0, 2.0, INF]))
    def test_homogeneous_and_triangle(self, seed, p, q):
        g = make_grid(5.0, 8, 1.0, 5)
        r = np.random.default_rng(seed)
        f = to_spectral(PhysicalField(g, r.normal(size=g.physical_shape)))
        h = to_spectral(PhysicalField(g, r.normal(size=g.physical_shape)))
        nf, nh = mixed_norm(f, p, q).value, mixed_norm(h, p, q).value
        assert mixed_norm(f * -2.5, p, q).value == pytest.approx(2.5 * nf, rel=1e-12)
        assert mixed_norm(f + h, p, q).value <= (nf + nh) * (1 + 1e-12)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            NormSpec(0.5, 2)
        with pytest.raises(ValueError):
            NormSpec(2, 2, alpha=(-1, 0))


class TestSobolevAndX:
    def test_hs_of_cosine(self):
        g = make_grid(2 * np.pi, 16, 2.0, 17)
        f = _field(g, lambda x1, x2, z: np.cos(3 * x1))
        base = g.L**2 * g.Z / 2
        assert hs_norm(f, 0) == pytest.approx(math.sqrt(base), rel=1e-12)
        assert hs_norm(f, 1) == pytest.approx(math.sqrt(base * (1 + 9)), rel=1e-12)
        assert hs_norm(f, 2) == pytest.approx(math.sqrt(base * (1 + 9 + 81)), rel=1e-12)

    def test_xs_homogeneous(self, divfree_u):
        part = build_partition(divfree_u.grid)
        a = xs_norm(divfree_u, 2, part).value
        assert a > 0
        assert xs_norm(divfree_u * 3.0, 2, part).value == pytest.approx(3 * a, rel=1e-12)

    def test_xs_rejects_negative(self, divfree_u):
        with pytest.raises(ValueError):
            xs_norm(divfree_u, -1)

    def test_cl_dominates_mixed_for_sigma_one(self, divfree_u):
        f = divfree_u.u3
        assert chemin_lerner_norm(f, 2, 2, 1).value >= mixed_norm(f, 2, 2).value * (1 - 1e-12)


class TestBernstein:
    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32), st.sampled_from([((0, 0), 2.0, 2.0), ((1, 0), 2.0, 2.0), ((0, 1), 2.0, INF),
                                                   ((0, 0), 1.0, INF), ((1, 0), 1.0, 2.0)]))
    def test_ratio_bounded(self, seed, case):
        g = make_grid(16.0, 64, 1.0, 4)
        part = build_partition(g)
        alpha, p, q = case
        r = np.random.default_rng(seed)
        j = int(r.integers(part.j_min + 3, part.j_max - 2))
        f = to_spectral(PhysicalField(g, r.normal(size=g.physical_shape)))
        f = dyadic_block(f, j, part)
        assert verify_bernstein(f, j, alpha, p, q, part) <= BERNSTEIN_BOUND

    def test_rejects_field_outside_shell(self, small_grid):
        c = np.zeros(small_grid.spectral_shape, complex)
        c[:, 1, 0] = 1.0
        with pytest.raises(ValueError, match="shell"):
            verify_bernstein(SpectralField(small_grid, c), 3, (0, 0), 2, 2)


class TestSuite:
    def test_all_pass(self, small_grid):
        rows = run_lp_checks(small_grid, seed=1)
        assert rows and all(r["passed"] for r in rows), [r for r in rows if not r["passed"]]

    def test_detects_corrupted_profile(self, small_grid):
        part = build_partition(small_grid, phi=lambda r: 0.9 * phi_profile(r))
        rows = {r["check"]: r for r in run_lp_checks(small_grid, part, seed=1)}
        assert not rows["partition_of_unity"]["passed"]


class TestSpecExamples:
    def test_phi_is_one_on_plateau(self):
        r = np.linspace(4 / 3, 1.5, 50)
        np.testing.assert_array_equal(phi_profile(r), 1.0)

    def test_shell_range(self):
        part = build_partition(make_grid(2 * np.pi, 256, 1.0, 4))
        assert len(part.shells) >= 6

    def test_single_mode_block(self):
        g = make_grid(2 * np.pi, 32, 1.0, 4)
        f = _field(g, lambda x1, x2, z: np.cos(3 * x1))
        np.testing.assert_allclose(dyadic_block(f, 1).coeffs, f.coeffs, atol=1e-15)
        assert np.abs(dyadic_block(f, 4).coeffs).max() < 1e-15

    @pytest.fixture(scope="class")
    @classmethod
    def one_shell(cls):
        g = make_grid(2 * np.pi, 32, 2.0, 17)
        return _field(g, lambda x1, x2, z: np.cos(3 * x1) * np.exp(-z))

    @pytest.mark.parametrize("sigma", [1, 2, INF])
    def test_single_shell_norm(self, one_shell, sigma):
        for p, q in ((2, 2), (INF, 1), (1, INF)):
            cl = chemin_lerner_norm(one_shell, p, q, sigma).value
            assert cl == pytest.approx(mixed_norm(one_shell, p, q).value, rel=1e-12)

    def test_sigma_one_is_shell_sum(self, divfree_u):
        part = build_partition(divfree_u.grid)
        f = divfree_u.u1
        explicit = sum(mixed_norm(dyadic_block(f, j, part), 2, INF).value for j in part.shells)
        assert chemin_lerner_norm(f, 2, INF, 1, part).value == pytest.approx(explicit, rel=1e-12)

    @pytest.mark.parametrize("p,q", [(2, 2), (1, INF), (INF, 1)])
    def test_nonincreasing_in_sigma(self, divfree_u, p, q):
        part = build_partition(divfree_u.grid)
        vals = [chemin_lerner_norm(divfree_u, p, q, s, part).value for s in (1, 2, INF)]
        assert vals[0] >= vals[1] >= vals[2]

    @pytest.mark.parametrize("p,q", [(1, 1), (2, INF), (INF, 2), (3, 1.5)])
    def test_tensor_product(self, p, q):
        g = make_grid(8.0, 32, 3.0, 31)

        def gh(x1, x2):
            return 1.5 + np.sin(2 * np.pi * x1 / g.L) * np.cos(2 * np.pi * x2 / g.L)

        def hv(z):
            return np.exp(-z) * (1 + z)

        prod = mixed_norm(_field(g, lambda x1, x2, z: gh(x1, x2) * hv(z)), p, q).value
        horizontal = mixed_norm(_field(g, lambda x1, x2, z: gh(x1, x2)), p, q).value / g.Z ** (1 / q)
        vertical = mixed_norm(_field(g, lambda x1, x2, z: hv(z)), p, q).value / g.L ** (2 / p)
        assert prod == pytest.approx(horizontal * vertical, rel=1e-12)

    @pytest.mark.parametrize("p", [1, 2, INF])
    def test_gaussian_against_exact(self, p):
        """exp(-|x_h - c|^2) e^{-x3}: horizontal part is (pi/p)^(1/p), vertical sup is 1."""
        g = make_grid(16.0, 64, 2.0, 5)
        f = _field(g, lambda x1, x2, z: np.exp(-((x1 - 8) ** 2 + (x2 - 8) ** 2) - z))
        exact = 1.0 if p == INF else (np.pi / p) ** (1 / p)
        assert mixed_norm(f, p, INF).value == pytest.approx(exact, rel=1e-6)

    def test_bernstein_pure_mode_is_sharp(self):
        g = make_grid(2 * np.pi, 32, 1.0, 4)
        f = _field(g, lambda x1, x2, z: np.cos(2 * x1))
        assert verify_bernstein(f, 1, (1, 0), 2, 2) == pytest.approx(1.0, rel=1e-12)

    def test_zero_field_xs(self, small_grid):
        from anisolab import VectorField

        assert xs_norm(VectorField.zeros(small_grid), 3).value == 0.0
