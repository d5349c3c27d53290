"""Gaussian-process surrogate over the ``(eps, L)`` search space."""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._validation import ContractViolation
from .hmc import HyperParams

DEFAULT_KERNEL_WIDTH = 0.2
DEFAULT_NOISE = 0.1


class GPFactorizationError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    """Box of step sizes and trajectory lengths with a fine step-size grid."""

    eps_bounds: tuple
    L_bounds: tuple
    eps_grid_size: int = 200

    def __post_init__(self):
        lo, hi = (float(v) for v in self.eps_bounds)
        llo, lhi = (int(v) for v in self.L_bounds)
        if not (0 < lo <= hi):
            raise ContractViolation(f"bad eps bounds {self.eps_bounds}")
        if not (1 <= llo <= lhi):
            raise ContractViolation(f"bad L bounds {self.L_bounds}")
        if self.eps_grid_size < 1 or (self.eps_grid_size == 1 and lo != hi):
            raise ContractViolation("eps grid must cover both endpoints")
        object.__setattr__(self, "eps_bounds", (lo, hi))
        object.__setattr__(self, "L_bounds", (llo, lhi))

    @property
    def eps_grid(self):
        lo, hi = self.eps_bounds
        if lo == hi:
            return np.array([lo])
        return np.linspace(lo, hi, self.eps_grid_size)

    @property
    def L_values(self):
        return np.arange(self.L_bounds[0], self.L_bounds[1] + 1)

    def grid(self):
        """All grid points as an ``(n, 2)`` array, ordered by eps then L."""
        e, l = np.meshgrid(self.eps_grid, self.L_values, indexing="ij")
        return np.column_stack([e.ravel(), l.ravel().astype(float)])

    def contains(self, gamma):
        (lo, hi), (llo, lhi) = self.eps_bounds, self.L_bounds
        return lo <= gamma.eps <= hi and llo <= gamma.L <= lhi

    def length_scales(self, kernel_width=DEFAULT_KERNEL_WIDTH):
        (lo, hi), (llo, lhi) = self.eps_bounds, self.L_bounds
        return np.array([kernel_width * (hi - lo), kernel_width * (lhi - llo)])


def _scaled_sqdist(A, B, length_scales):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    ls = np.broadcast_to(np.asarray(length_scales, dtype=float), A.shape[1:])
    out = np.zeros((A.shape[0], B.shape[0]))
    # one feature at a time keeps memory at len(A) * len(B)
    for k, width in enumerate(ls):
        diff = A[:, k, None] - B[None, :, k]
        if width == 0:
            if np.any(diff != 0):
                raise ContractViolation(
                    "points differ along a zero-width search dimension")
            continue
        out += (diff / width) ** 2
    return out


def kernel_matrix(A, B, length_scales):
    """Squared-exponential ARD covariance between rows of ``A`` and ``B``."""
    return np.exp(-0.5 * _scaled_sqdist(A, B, length_scales))


def kernel(gamma_a, gamma_b, space, kernel_width=DEFAULT_KERNEL_WIDTH):
    """Covariance between two hyperparameter settings."""
    a = [gamma_a.eps, gamma_a.L]
    b = [gamma_b.eps, gamma_b.L]
    return float(kernel_matrix(a, b, space.length_scales(kernel_width))[0, 0])


class GPSurrogate(RegressorMixin, BaseEstimator):
    """Zero-mean GP regressor with a fixed squared-exponential ARD kernel.

    Parameters
    ----------
    length_scales : array-like of shape (n_features,)
        Per-dimension kernel widths; a zero width marks a dimension whose
        training and query coordinates are all equal.
    noise : float
        Observation noise variance.
    collapse_duplicates : bool
        Replace repeated inputs by their mean target with noise
        ``noise / count``.  The posterior is identical; the factorised
        matrix only grows with the number of distinct inputs.
    """

    def __init__(self, length_scales=(1.0,), noise=DEFAULT_NOISE,
                 collapse_duplicates=False):
        self.length_scales = length_scales
        self.noise = noise
        self.collapse_duplicates = collapse_duplicates

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if self.noise <= 0:
            raise ContractViolation("noise must be positive")
        noise = np.full(len(y), float(self.noise))
        if self.collapse_duplicates:
            X, y, noise = collapse(X, y, self.noise)
        K = kernel_matrix(X, X, self.length_scales)
        K[np.diag_indices_from(K)] += noise
        try:
            self.chol_ = linalg.cholesky(K, lower=True)
        except linalg.LinAlgError as exc:
            raise GPFactorizationError(
                "K + noise I is not positive definite") from exc
        self.X_train_ = X
        self.alpha_ = linalg.cho_solve((self.chol_, True), y)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X, return_std=False, return_var=False):
        X = check_array(X)
        if not hasattr(self, "X_train_"):
            # unfitted surrogate is the prior
            mean = np.zeros(X.shape[0])
            var = np.ones(X.shape[0])
        else:
            check_is_fitted(self)
            Ks = kernel_matrix(X, self.X_train_, self.length_scales)
            mean = Ks @ self.alpha_
            v = linalg.solve_triangular(self.chol_, Ks.T, lower=True)
            var = np.maximum(1.0 - np.einsum("ij,ij->j", v, v), 0.0)
        if return_var:
            return mean, var
        if return_std:
            return mean, np.sqrt(var)
        return mean


def collapse(X, y, noise):
    """Merge duplicate rows of ``X``: mean target, noise divided by count."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    uniq, inverse, counts = np.unique(X, axis=0, return_inverse=True,
                                      return_counts=True)
    inverse = inverse.ravel()
    means = np.bincount(inverse, weights=y) / counts
    return uniq, means, float(noise) / counts


@dataclass(frozen=True)
class RewardDataset:
    """Append-only history of ``(gamma, reward)`` observations."""

    space: SearchSpace
    noise: float = DEFAULT_NOISE
    kernel_width: float = DEFAULT_KERNEL_WIDTH
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    rewards: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self):
        return self.rewards.shape[0]

    def surrogate(self, collapsed=False):
        gp = GPSurrogate(self.space.length_scales(self.kernel_width),
                         self.noise, collapse_duplicates=collapsed)
        if len(self):
            gp.fit(self.points, self.rewards)
        return gp


@dataclass(frozen=True)
class GPPosterior:
    mean: float
    variance: float


def add_observation(dataset, gamma, reward):
    """Return a new dataset with ``(gamma, reward)`` appended."""
    if not np.isfinite(reward):
        raise ContractViolation(f"reward must be finite, got {reward}")
    if not dataset.space.contains(gamma):
        raise ContractViolation(f"{gamma} lies outside the search space")
    return RewardDataset(
        dataset.space, dataset.noise, dataset.kernel_width,
        np.vstack([dataset.points, [gamma.eps, gamma.L]]),
        np.append(dataset.rewards, float(reward)),
    )


def posterior(dataset, gamma, collapsed=False):
    """Posterior mean and variance of the reward surface at ``gamma``."""
    mean, var = dataset.surrogate(collapsed).predict(
        [[gamma.eps, gamma.L]], return_var=True)
    return GPPosterior(float(mean[0]), float(var[0]))


def as_hyperparams(row):
    return HyperParams(float(row[0]), int(round(row[1])))
