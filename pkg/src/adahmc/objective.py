"""Reward signals computed from a window of chain positions."""

from dataclasses import dataclass

import numpy as np

from ._validation import ContractViolation


@dataclass(frozen=True)
class SampleWindow:
    """``m + 1`` consecutive positions: the state before the window's first
    transition followed by the ``m`` transition outputs."""

    positions: np.ndarray
    leapfrog_ledger: int = 0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.ndim != 2 or pos.shape[0] < 2:
            raise ContractViolation("a window needs at least two positions")
        object.__setattr__(self, "positions", pos)

    @property
    def n_transitions(self):
        return self.positions.shape[0] - 1


@dataclass(frozen=True)
class Reward:
    value: float
    gamma: object


def squared_jumps(window):
    steps = np.diff(window.positions, axis=0)
    return np.einsum("ij,ij->i", steps, steps)


def esjd(window):
    """Mean squared Euclidean jump between consecutive positions."""
    return float(np.mean(squared_jumps(window)))


def normalized_esjd(window, gamma):
    """ESJD divided by ``sqrt(L)``, the default adaptation reward."""
    return Reward(esjd(window) / np.sqrt(gamma.L), gamma)


def esjd_reward(window, records, gamma):
    """Reward-function adapter for :func:`normalized_esjd`.

    Any callable with this ``(window, records, gamma) -> float`` signature can
    be passed to the adaptive sampler in its place.
    """
    return normalized_esjd(window, gamma).value


def acceptance_rate(records):
    if len(records) == 0:
        raise ContractViolation("acceptance_rate needs at least one record")
    return sum(r.accepted for r in records) / len(records)
