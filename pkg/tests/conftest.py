"""Shared fixtures: one mechanism per prior family, built once.

Construction fills quadrature caches, so every fixture is session
scoped; tests must not mutate them.
"""

import numpy as np
import pytest

from gausspml import (
    GaussianMixturePrior,
    GaussianPrior,
    GridPrior,
    Mechanism,
    QuadratureConfig,
    StronglyLogConcavePrior,
)


@pytest.fixture(scope="session")
def canonical():
    """Gaussian prior sigma_x=1, sigma_n=1: every closed form applies."""
    return Mechanism(GaussianPrior(1.0), 1.0)


@pytest.fixture(scope="session")
def wide_gaussian():
    """sigma_x=2, sigma_n=1: variance ratio too large for the closed form."""
    return Mechanism(GaussianPrior(2.0), 1.0)


@pytest.fixture(scope="session")
def slc():
    """Strongly log-concave, non-Gaussian: quartic tilt on a unit Gaussian."""
    return Mechanism(StronglyLogConcavePrior(1.0, 1.0, 4.0), 1.0)


@pytest.fixture(scope="session")
def mixture():
    """Symmetric two-component mixture: not log-concave, bimodal marginal."""
    return Mechanism(GaussianMixturePrior((0.5, 0.5), (-2.0, 2.0), (1.0, 1.0)), 1.0)


@pytest.fixture(scope="session")
def oscillating():
    """Tabulated prior with an oscillating log-density and tiny noise.

    The custom y-grid stops inside the oscillation zone, so no tail
    unimodality threshold can be certified on it.
    """
    xs = np.linspace(-6.0, 6.0, 2001)
    prior = GridPrior(tuple(xs), tuple(-0.1 * xs**2 + 2.0 * np.sin(4.0 * xs)))
    cfg = QuadratureConfig(truncation_halfwidth=10.0, panel_count=16384, abs_tol=1e-8)
    return Mechanism(prior, 0.05, cfg, y_grid=np.linspace(-5.0, 5.0, 4096))
