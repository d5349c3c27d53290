"""UCB acquisition with a vanishing exploration/adaptation probability."""

import logging
from dataclasses import dataclass

import numpy as np

from ._validation import ContractViolation
from .gp import as_hyperparams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Schedules:
    """Constants of the acquisition and adaptation schedules.

    ``k`` delays the decay of the adaptation probability, ``delta`` enters the
    confidence multiplier, ``scale_alpha`` is the value the best reward is
    rescaled to and ``d`` is the dimension of the search space.
    """

    k: int = 100
    delta: float = 0.1
    scale_alpha: float = 4.0
    d: int = 2

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ContractViolation(f"k must be a positive integer, got {self.k}")
        if not 0 < self.delta < 1:
            raise ContractViolation(f"delta must be in (0, 1), got {self.delta}")
        if self.scale_alpha <= 0:
            raise ContractViolation("scale_alpha must be positive")


@dataclass(frozen=True)
class ScaleState:
    s: float = 1.0
    best_reward: float = -np.inf
    flagged: bool = False


def beta(i, d=2, delta=0.1):
    """Confidence multiplier for round ``i + 1``."""
    if i < 0:
        raise ContractViolation("iteration index must be >= 0")
    return 2.0 * np.log((i + 1) ** (d / 2 + 2) * np.pi ** 2 / (3 * delta))


def adapt_probability(i, k=100):
    """``max(i - k + 1, 1) ** -0.5``; equals 1 for every ``i <= k``."""
    if i < 1 or k < 1:
        raise ContractViolation("need i >= 1 and k >= 1")
    return float(max(i - k + 1, 1)) ** -0.5


def _scores(mean, std, s, i, schedules, p=None, confidence=None):
    if p is None:
        p = adapt_probability(i, schedules.k)
    if confidence is None:
        confidence = beta(i, schedules.d, schedules.delta)
    return s * mean + p * np.sqrt(confidence) * std


def ucb_score(gamma, s, dataset, i, schedules, p=None, collapsed=True,
              confidence=None):
    """Acquisition value ``s * mu + p_i * sqrt(beta_{i+1}) * sigma``.

    ``p`` overrides the adaptation probability that damps exploration and
    ``confidence`` overrides the multiplier ``beta_{i+1}``.
    """
    mean, std = dataset.surrogate(collapsed).predict(
        [[gamma.eps, gamma.L]], return_std=True)
    return float(_scores(mean, std, s, i, schedules, p, confidence)[0])


def grid_scores(dataset, s, i, space, schedules, p=None, collapsed=True):
    """Acquisition values over the whole search grid (eps-major order)."""
    grid = space.grid()
    mean, std = dataset.surrogate(collapsed).predict(grid, return_std=True)
    return grid, _scores(mean, std, s, i, schedules, p)


def propose_next(dataset, s, i, space, schedules, p=None, collapsed=True):
    """Grid argmax of the acquisition; ties go to the smallest ``(eps, L)``."""
    grid, scores = grid_scores(dataset, s, i, space, schedules, p, collapsed)
    return as_hyperparams(grid[int(np.argmax(scores))])


def update_scale(scale, reward, scale_alpha=4.0):
    """Rescale so that a new best reward maps to ``scale_alpha``.

    A new maximum that is not positive leaves ``s`` unchanged and sets
    ``flagged``.
    """
    if not np.isfinite(reward):
        raise ContractViolation(f"reward must be finite, got {reward}")
    if reward <= scale.best_reward:
        return scale
    if reward <= 0:
        logger.debug("non-positive best reward %g; keeping s=%g",
                       reward, scale.s)
        return ScaleState(scale.s, float(reward), True)
    return ScaleState(scale_alpha / reward, float(reward), False)
