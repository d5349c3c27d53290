import numpy as np
import pytest

from adahmc.targets import (
    GaussianTarget,
    LogGaussianCoxModel,
    LogisticRegressionModel,
    StochasticVolatilityModel,
    TargetModel,
    simulate_lgc_data,
    simulate_logistic_data,
    simulate_sv_data,
)


class FlatTarget(TargetModel):
    """Zero potential: a free particle."""

    def __init__(self, dim):
        self.dim = dim

    def _log_density(self, x):
        return 0.0

    def _grad_log_density(self, x):
        return np.zeros_like(x)


def central_difference(f, x, h=1e-5):
    grad = np.empty_like(x)
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        grad[j] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


@pytest.fixture
def std_normal_1d():
    return GaussianTarget([0.0], [[1.0]])


@pytest.fixture
def logistic_model():
    X, y, _ = simulate_logistic_data(60, 3, seed=3)
    return LogisticRegressionModel(X, y, prior_variance=4.0)


@pytest.fixture
def lgc_model():
    counts, _ = simulate_lgc_data(3, mu=1.0, sigma2=1.5, beta=0.5, seed=11)
    return LogGaussianCoxModel(counts, mu=1.0, sigma2=1.5, beta=0.5)


@pytest.fixture
def sv_model():
    y = simulate_sv_data(25, beta=0.65, phi=0.95, sigma=0.2, seed=5)
    return StochasticVolatilityModel(y)
