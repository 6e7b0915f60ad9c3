import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import multivariate_normal

from awhmm import (
    DegenerateDensityError,
    Gaussian,
    InvalidInputError,
    kl_gaussian,
    log_pdf,
    sample,
    sqrtm_psd,
    w2_gaussian,
)
from awhmm.gaussians import log_pdf_many, log_pdf_support

from conftest import random_gaussian, random_psd


def psd_strategy(d):
    return st.builds(
        lambda seed: random_psd(np.random.default_rng(seed), d),
        st.integers(0, 2**32 - 1),
    )


def gaussian_strategy(d):
    return st.builds(
        lambda seed: random_gaussian(np.random.default_rng(seed), d),
        st.integers(0, 2**32 - 1),
    )


class TestConstruction:
    def test_rejects_asymmetric_cov(self):
        with pytest.raises(InvalidInputError):
            Gaussian([0, 0], [[1.0, 0.5], [0.0, 1.0]])

    def test_rejects_indefinite_cov(self):
        with pytest.raises(InvalidInputError):
            Gaussian([0, 0], [[1.0, 0.0], [0.0, -0.5]])

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            Gaussian([0, 0, 0], np.eye(2))

    def test_clamps_tiny_negative_eigenvalue(self):
        cov = np.eye(2) * 1e-12 - np.full((2, 2), 1e-12)
        g = Gaussian([0, 0], cov)
        assert np.linalg.eigvalsh(g.cov)[0] >= 0.0

    def test_degeneracy_flag(self):
        assert Gaussian([0, 0], np.diag([1.0, 0.0])).is_degenerate
        assert not Gaussian([0, 0], np.eye(2)).is_degenerate

    def test_immutability(self):
        g = Gaussian([0.0, 0.0], np.eye(2))
        with pytest.raises(ValueError):
            g.mean[0] = 1.0


class TestSqrtm:
    def test_identity(self):
        np.testing.assert_allclose(sqrtm_psd(np.eye(3)), np.eye(3))

    def test_square_recovers(self, rng):
        a = random_psd(rng, 4)
        root = sqrtm_psd(a)
        np.testing.assert_allclose(root @ root, a, atol=1e-10)

    def test_rejects_negative_definite(self):
        with pytest.raises(InvalidInputError):
            sqrtm_psd(-np.eye(2))


class TestW2:
    def test_equal_covariance_is_mean_distance(self):
        g1 = Gaussian([0, 0], np.eye(2))
        g2 = Gaussian([3, 4], np.eye(2))
        assert w2_gaussian(g1, g2) == pytest.approx(5.0, abs=1e-8)

    def test_scalar_case_is_sigma_gap(self):
        g1 = Gaussian([0.0], [[4.0]])
        g2 = Gaussian([0.0], [[1.0]])
        assert w2_gaussian(g1, g2) == pytest.approx(1.0, abs=1e-8)

    def test_finite_for_singular_covariance(self):
        g1 = Gaussian([0, 0], np.diag([1.0, 0.0]))
        g2 = Gaussian([1, 1], np.eye(2))
        assert np.isfinite(w2_gaussian(g1, g2))

    def test_point_masses(self):
        g1 = Gaussian([0, 0], np.zeros((2, 2)))
        g2 = Gaussian([3, 4], np.zeros((2, 2)))
        assert w2_gaussian(g1, g2) == pytest.approx(5.0, abs=1e-12)

    def test_monte_carlo_consistency(self, rng):
        # empirical W2 between sorted 1-d samples approximates the closed form
        g1 = Gaussian([0.0], [[1.0]])
        g2 = Gaussian([1.5], [[0.49]])
        x = np.sort(sample(g1, 5000, rng)[:, 0])
        y = np.sort(sample(g2, 5000, rng)[:, 0])
        empirical = np.sqrt(np.mean((x - y) ** 2))
        assert empirical == pytest.approx(w2_gaussian(g1, g2), abs=0.05)

    @settings(max_examples=50, deadline=None)
    @given(gaussian_strategy(2), gaussian_strategy(2))
    def test_symmetry(self, g1, g2):
        assert w2_gaussian(g1, g2) == pytest.approx(w2_gaussian(g2, g1), abs=1e-8)

    @settings(max_examples=50, deadline=None)
    @given(gaussian_strategy(3))
    def test_identity_of_indiscernibles(self, g):
        assert w2_gaussian(g, g) == pytest.approx(0.0, abs=1e-8)

    @settings(max_examples=50, deadline=None)
    @given(gaussian_strategy(2), gaussian_strategy(2), gaussian_strategy(2))
    def test_triangle_inequality(self, a, b, c):
        assert w2_gaussian(a, c) <= w2_gaussian(a, b) + w2_gaussian(b, c) + 1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            w2_gaussian(Gaussian([0], [[1.0]]), Gaussian([0, 0], np.eye(2)))


class TestLogPdf:
    def test_matches_scipy(self, rng):
        g = random_gaussian(rng, 3)
        x = rng.standard_normal(3)
        expected = multivariate_normal(g.mean, g.cov).logpdf(x)
        assert log_pdf(g, x) == pytest.approx(expected, abs=1e-9)

    def test_many_matches_scalar(self, rng):
        g = random_gaussian(rng, 2)
        xs = rng.standard_normal((10, 2))
        many = log_pdf_many(g, xs)
        for k in range(10):
            assert many[k] == pytest.approx(log_pdf(g, xs[k]), abs=1e-12)

    def test_degenerate_rejected(self):
        g = Gaussian([0, 0], np.diag([1.0, 0.0]))
        with pytest.raises(DegenerateDensityError):
            log_pdf(g, [0.0, 0.0])

    def test_support_restricted_density(self):
        g = Gaussian([0, 0], np.diag([1.0, 0.0]))
        on, off = log_pdf_support(g, [[0.5, 0.0], [0.5, 1.0]])
        expected = multivariate_normal([0.0], [[1.0]]).logpdf([0.5])
        assert on == pytest.approx(expected, abs=1e-9)
        assert off == -np.inf

    def test_support_equals_log_pdf_when_nonsingular(self, rng):
        g = random_gaussian(rng, 2)
        xs = rng.standard_normal((5, 2))
        np.testing.assert_allclose(log_pdf_support(g, xs), log_pdf_many(g, xs),
                                   atol=1e-10)


class TestSample:
    def test_moments(self, rng):
        g = Gaussian([1.0], [[1.0]])
        xs = sample(g, 10**5, rng)[:, 0]
        assert xs.mean() == pytest.approx(1.0, abs=0.02)
        assert xs.var() == pytest.approx(1.0, abs=0.05)

    def test_degenerate_direction_is_flat(self, rng):
        g = Gaussian([0, 0], np.diag([1.0, 0.0]))
        xs = sample(g, 100, rng)
        assert np.all(xs[:, 1] == 0.0)

    def test_rejects_nonpositive_n(self, rng):
        with pytest.raises(InvalidInputError):
            sample(Gaussian([0.0], [[1.0]]), 0, rng)


class TestKL:
    def test_shifted_unit_gaussians(self):
        g1 = Gaussian([0.0], [[1.0]])
        g2 = Gaussian([1.0], [[1.0]])
        assert kl_gaussian(g1, g2) == pytest.approx(0.5, abs=1e-12)

    def test_self_is_zero(self, rng):
        g = random_gaussian(rng, 3)
        assert kl_gaussian(g, g) == pytest.approx(0.0, abs=1e-10)

    def test_asymmetry(self):
        g1 = Gaussian([0.0], [[1.0]])
        g2 = Gaussian([0.0], [[4.0]])
        assert kl_gaussian(g1, g2) != pytest.approx(kl_gaussian(g2, g1), abs=1e-3)

    def test_degenerate_diverges(self):
        flat = Gaussian([0, 0], np.diag([1.0, 0.0]))
        full = Gaussian([0, 0], np.eye(2))
        with pytest.raises(DegenerateDensityError):
            kl_gaussian(flat, full)
        with pytest.raises(DegenerateDensityError):
            kl_gaussian(full, flat)

    def test_monte_carlo_consistency(self, rng):
        g1 = Gaussian([0.5, 0.0], random_psd(rng, 2))
        g2 = Gaussian([0.0, 1.0], random_psd(rng, 2))
        xs = sample(g1, 10**5, rng)
        mc = np.mean(log_pdf_many(g1, xs) - log_pdf_many(g2, xs))
        assert kl_gaussian(g1, g2) == pytest.approx(mc, abs=0.05)
