"""Mechanism caches, posterior statistics, and information density."""

import math

import numpy as np
import pytest

from gausspml import (
    DomainError,
    GaussianMixturePrior,
    GaussianPrior,
    GridPrior,
    Mechanism,
    NumericalError,
    QuadratureConfig,
    StronglyLogConcavePrior,
)
from oracles import (
    conjugate_posterior_mean,
    conjugate_posterior_variance,
    gaussian_marginal_density,
    normal_pdf,
    trapz_posterior_moments,
)


def _mixture_marginal(weights, means, sigmas, sigma_n, y):
    # noise adds in variance componentwise, so the marginal is again a
    # mixture: an exact closed form independent of the package quadrature
    total = np.zeros_like(np.asarray(y, dtype=float))
    for w, mu, s in zip(weights, means, sigmas):
        sy = math.sqrt(s * s + sigma_n * sigma_n)
        total = total + w * normal_pdf((np.asarray(y) - mu) / sy) / sy
    return total


class TestConstruction:
    def test_sigma_n_domain(self):
        for bad in (0.0, -1.0, float("nan"), float("inf")):
            with pytest.raises(DomainError):
                Mechanism(GaussianPrior(1.0), bad)

    def test_explicit_y_grid_validation(self):
        prior = GaussianPrior(1.0)
        with pytest.raises(DomainError):
            Mechanism(prior, 1.0, y_grid=np.linspace(0.0, 1.0, 8))  # too few
        with pytest.raises(DomainError):
            Mechanism(prior, 1.0, y_grid=np.zeros(32))  # not increasing
        with pytest.raises(DomainError):
            Mechanism(prior, 1.0, y_grid=np.linspace(0, 1, 32).reshape(4, 8))

    def test_unconverged_marginal_raises(self):
        # rapidly oscillating log-density at default resolution
        xs = np.linspace(-6.0, 6.0, 2001)
        prior = GridPrior(tuple(xs), tuple(-0.1 * xs**2 + 2.0 * np.sin(4.0 * xs)))
        with pytest.raises(NumericalError) as err:
            Mechanism(prior, 0.05)
        assert "marginal" in str(err.value)

    def test_windows(self, canonical):
        x_lo, x_hi = canonical.x_window
        lo, hi = canonical.window
        assert (x_lo, x_hi) == (-10.0, 10.0)
        assert lo == pytest.approx(x_lo - 10.0)  # pad = halfwidth * sigma_n
        assert hi == pytest.approx(x_hi + 10.0)
        assert canonical.sigma_y == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_mixture_sigma_y(self, mixture):
        # prior variance 1 + 4, noise 1
        assert mixture.sigma_y == pytest.approx(math.sqrt(6.0), rel=1e-9)


class TestMarginal:
    def test_gaussian_density_closed_form(self, canonical):
        ys = np.linspace(-7.0, 7.0, 57)
        expected = np.array([gaussian_marginal_density(1.0, 1.0, y) for y in ys])
        np.testing.assert_allclose(canonical.marginal_density(ys), expected, rtol=1e-12)

    def test_mixture_density_closed_form(self, mixture):
        ys = np.linspace(-8.0, 8.0, 65)
        expected = _mixture_marginal((0.5, 0.5), (-2.0, 2.0), (1.0, 1.0), 1.0, ys)
        np.testing.assert_allclose(mixture.marginal_density(ys), expected, rtol=1e-9)

    def test_gaussian_cdf_closed_form(self, canonical):
        from gausspml.numerics import std_normal_cdf

        sy = math.sqrt(2.0)
        for y in (-4.0, -1.0, 0.0, 0.5, 3.0):
            assert canonical.marginal_cdf(y) == pytest.approx(
                std_normal_cdf(y / sy), rel=1e-10, abs=1e-12
            )

    def test_quantile_inverts_cdf(self, canonical, slc, mixture):
        ps = (1e-4, 0.01, 0.3, 0.5, 0.77, 0.99, 1 - 1e-4)
        for m in (canonical, slc, mixture):
            for p in ps:
                y = m.marginal_quantile(p)
                assert m.marginal_cdf(y) == pytest.approx(p, abs=1e-11)

    def test_quantile_domain(self, canonical):
        for p in (0.0, 1.0, -0.2, 2.0, 1e-300):
            with pytest.raises(DomainError):
                canonical.marginal_quantile(p)

    def test_density_positive_on_window(self, slc):
        lo, hi = slc.window
        ys = np.linspace(lo + 1e-6, hi - 1e-6, 101)
        assert np.all(slc.marginal_density(ys) > 0.0)


class TestPosterior:
    def test_conjugate_mean(self, canonical):
        ys = np.linspace(-7.0, 7.0, 29)
        np.testing.assert_allclose(
            canonical.posterior_mean(ys),
            conjugate_posterior_mean(1.0, 1.0, ys),
            rtol=0,
            atol=1e-10,
        )

    def test_conjugate_variance(self, canonical):
        ys = np.linspace(-7.0, 7.0, 29)
        np.testing.assert_allclose(
            canonical.posterior_variance(ys),
            conjugate_posterior_variance(1.0, 1.0),
            rtol=1e-8,
        )

    @pytest.mark.parametrize("fixture", ["slc", "mixture"])
    def test_moments_match_quadrature_oracle(self, fixture, request):
        m = request.getfixturevalue(fixture)
        prior = m.prior
        x_lo, x_hi = m.x_window
        for y in (-2.5, -0.7, 0.0, 1.1, 3.0):
            _, mean_o, var_o = trapz_posterior_moments(
                lambda x: prior.density(x), 1.0, y, x_lo, x_hi
            )
            assert float(m.posterior_mean(y)) == pytest.approx(mean_o, abs=1e-6)
            assert float(m.posterior_variance(y)) == pytest.approx(var_o, abs=1e-6)

    def test_variance_positive(self, slc, mixture):
        ys = np.linspace(-5.0, 5.0, 41)
        assert np.all(slc.posterior_variance(ys) > 0.0)
        assert np.all(mixture.posterior_variance(ys) > 0.0)

    def test_mixture_variance_exceeds_components_near_valley(self, mixture):
        # at y=0 the posterior splits mass between both modes
        assert float(mixture.posterior_variance(0.0)) > 1.0


class TestInfoDensity:
    def test_definition_consistency(self, canonical):
        xs = np.array([-1.0, 0.0, 2.0])
        ys = np.array([0.5, -0.3, 1.7])
        got = canonical.info_density(xs, ys)
        kernel = normal_pdf(ys - xs)  # sigma_n = 1
        expected = np.log(kernel) - np.log(canonical.marginal_density(ys))
        np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_broadcasting(self, canonical):
        xs = np.linspace(-1.0, 1.0, 5)[:, None]
        ys = np.linspace(-2.0, 2.0, 7)[None, :]
        out = canonical.info_density(xs, ys)
        assert out.shape == (5, 7)

    def test_peak_value_nonnegative(self, canonical, mixture):
        # at x = y the kernel attains its mode, which dominates any
        # marginal with more spread than the noise
        ys = np.linspace(-4.0, 4.0, 33)
        for m in (canonical, mixture):
            assert np.all(m.info_density(ys, ys) >= 0.0)


class TestUnimodalTailThreshold:
    def test_gaussian_tiny(self, canonical):
        M = canonical.unimodal_tail_threshold()
        assert M is not None
        assert abs(M) < 0.05  # strictly unimodal marginal

    def test_mixture_between_modes(self, mixture):
        M = mixture.unimodal_tail_threshold()
        assert M is not None
        assert 1.5 < M < 2.5

    def test_oscillating_not_certifiable(self, oscillating):
        assert oscillating.unimodal_tail_threshold() is None
