"""Verification checks and the suite runner."""

import math

import numpy as np
import pytest

from gausspml import (
    DomainError,
    Interval,
    check_bathtub_optimality,
    check_brascamp_lieb_bound,
    check_concavity_identity,
    check_interval_monotonicity,
    check_tail_worst_bound,
    event_mass,
    run_suite,
)
from gausspml.verify import _SUITE, _random_union


class TestCheckResultInvariant:
    def test_passed_iff_within_tolerance(self, canonical):
        for r in run_suite(canonical, seed=2):
            assert r.passed == (r.worst_violation <= r.tolerance)


class TestConcavityIdentity:
    @pytest.mark.parametrize("fixture", ["canonical", "slc", "mixture"])
    def test_passes(self, fixture, request):
        m = request.getfixturevalue(fixture)
        r = check_concavity_identity(m, 100, seed=1)
        assert r.passed
        assert r.worst_violation < 1e-5  # comfortable margin under the 1e-4 gate

    def test_reproducible(self, canonical):
        a = check_concavity_identity(canonical, 50, seed=9)
        b = check_concavity_identity(canonical, 50, seed=9)
        assert a == b

    def test_bad_sample_count(self, canonical):
        with pytest.raises(DomainError):
            check_concavity_identity(canonical, 0)


class TestIntervalMonotonicity:
    def test_gaussian_in_regime(self, canonical):
        r = check_interval_monotonicity(canonical, 0.5, 0.5 + 8.5 * canonical.sigma_y, 500)
        assert r.passed

    def test_gaussian_needs_positive_a(self, canonical):
        with pytest.raises(DomainError):
            check_interval_monotonicity(canonical, -0.5, 4.0, 100)

    def test_mixture_needs_a_beyond_threshold(self, mixture):
        with pytest.raises(DomainError):
            check_interval_monotonicity(mixture, 1.0, 6.0, 100)  # M ~ 1.9

    def test_mixture_beyond_threshold_passes(self, mixture):
        r = check_interval_monotonicity(mixture, 2.5, 2.5 + 8.0 * mixture.sigma_y, 400)
        assert r.passed

    def test_short_grid_skips_limit_condition(self, canonical):
        # b_max below a + 8 sigma_y: only positivity and monotonicity apply
        r = check_interval_monotonicity(canonical, 0.5, 3.0, 200)
        assert r.passed
        assert "terminal" not in r.details

    def test_bad_grid(self, canonical):
        with pytest.raises(DomainError):
            check_interval_monotonicity(canonical, 0.5, 4.0, 1)
        with pytest.raises(DomainError):
            check_interval_monotonicity(canonical, 2.0, 1.0, 100)


class TestTailWorstBound:
    def test_canonical(self, canonical):
        r = check_tail_worst_bound(canonical, 0.1, 50, seed=3)
        assert r.passed
        assert r.worst_violation <= 1e-5

    def test_mixture(self, mixture):
        r = check_tail_worst_bound(mixture, 0.2, 30, seed=3)
        assert r.passed

    def test_delta_domain(self, canonical):
        for bad in (0.0, 1.0, 2.0):
            with pytest.raises(DomainError):
                check_tail_worst_bound(canonical, bad, 5)


class TestRandomUnion:
    def test_mass_within_tolerance(self, canonical):
        rng = np.random.default_rng(0)
        for _ in range(50):
            cells = _random_union(canonical, rng, 0.15)
            assert 1 <= len(cells) <= 4
            assert abs(event_mass(canonical, cells) - 0.15) <= 1e-6
            for left, right in zip(cells, cells[1:]):
                assert left.hi <= right.lo + 1e-12

    def test_respects_window(self, canonical):
        rng = np.random.default_rng(1)
        for _ in range(20):
            cells = _random_union(canonical, rng, 0.05, window=(-1.0, 1.0))
            assert cells[0].lo >= -1.0
            assert cells[-1].hi <= 1.0

    def test_infeasible_target(self, canonical):
        rng = np.random.default_rng(2)
        with pytest.raises(DomainError):
            _random_union(canonical, rng, 1.5)


class TestBathtubOptimality:
    def test_centered(self, canonical):
        r = check_bathtub_optimality(
            canonical, 0.0, Interval(-2.0, 2.0), 0.2, 100, seed=4
        )
        assert r.passed

    def test_off_center_source(self, canonical):
        r = check_bathtub_optimality(
            canonical, 1.5, Interval(-1.0, 3.0), 0.15, 100, seed=5
        )
        assert r.passed

    def test_unbounded_range_rejected(self, canonical):
        with pytest.raises(DomainError):
            check_bathtub_optimality(
                canonical, 0.0, Interval(0.0, math.inf), 0.1, 10
            )

    def test_excessive_delta_rejected(self, canonical):
        with pytest.raises(DomainError):
            check_bathtub_optimality(canonical, 0.0, Interval(-1.0, 1.0), 0.9, 10)


class TestBrascampLieb:
    def test_gaussian_equality(self, canonical):
        r = check_brascamp_lieb_bound(canonical)
        assert r.passed
        assert "variance" in r.details
        # conjugate case: the bound is met with equality
        assert abs(r.worst_violation) < 1e-8

    def test_slc_strict_slack(self, slc):
        r = check_brascamp_lieb_bound(slc)
        assert r.passed
        assert r.worst_violation < -0.1  # quartic tilt shrinks the posterior

    def test_mixture_not_applicable(self, mixture):
        r = check_brascamp_lieb_bound(mixture)
        assert r.passed
        assert "not applicable" in r.details
        assert r.worst_violation == 0.0


class TestRunSuite:
    def test_all_pass_on_canonical(self, canonical):
        results = run_suite(canonical, seed=7)
        assert [r.name for r in results] == list(_SUITE)
        assert all(r.passed for r in results)

    def test_all_pass_on_slc(self, slc):
        assert all(r.passed for r in run_suite(slc, seed=7))

    def test_subset_selection(self, canonical):
        results = run_suite(canonical, suite="concavity_identity,brascamp_lieb_bound")
        assert [r.name for r in results] == [
            "concavity_identity",
            "brascamp_lieb_bound",
        ]

    def test_unknown_name_rejected(self, canonical):
        with pytest.raises(DomainError):
            run_suite(canonical, suite="nonexistent_check")

    def test_thread_count_does_not_change_results(self, canonical, monkeypatch):
        monkeypatch.setenv("PML_NUM_THREADS", "1")
        seq = run_suite(canonical, seed=5)
        monkeypatch.setenv("PML_NUM_THREADS", "8")
        par = run_suite(canonical, seed=5)
        assert seq == par

    def test_inapplicable_check_reported_not_failed(self, oscillating):
        results = run_suite(oscillating, suite="interval_monotonicity")
        assert len(results) == 1
        assert results[0].passed
        assert "not applicable" in results[0].details
