"""Target distributions on unconstrained coordinates.

Every model exposes ``log_density`` and ``grad_log_density`` as public,
validated entry points.  Samplers call the unchecked ``_log_density`` and
``_grad_log_density`` directly so that a trajectory which wanders into
non-finite territory produces a divergence instead of an exception.

Each model drops additive constants that do not depend on the state; the
dropped terms are listed in the class docstrings.  Only differences of
log-densities are meaningful.
"""

import numpy as np
from scipy import linalg, special, stats

from ._validation import ContractViolation, check_positive, check_vector

#: Half-width of the default compact support box.
DEFAULT_BOX = 1e6


class SingularCovarianceError(np.linalg.LinAlgError):
    """A covariance matrix could not be Cholesky-factorised."""


class StationarityError(ValueError):
    """Autoregressive coefficient outside the stationary region."""


class TargetModel:
    """Base class for a differentiable log-density on ``R^dim``.

    Subclasses set ``dim`` and implement ``_log_density`` and
    ``_grad_log_density``.  ``support_box`` is an optional ``(lower, upper)``
    pair of arrays; when unset the box is ``[-1e6, 1e6]`` per coordinate.
    """

    dim = None
    support_box = None

    def log_density(self, x):
        """Unnormalised log target at ``x``."""
        return float(self._log_density(check_vector(x, self.dim)))

    def grad_log_density(self, x):
        """Gradient of :meth:`log_density` at ``x``."""
        return self._grad_log_density(check_vector(x, self.dim))

    def _log_density(self, x):
        raise NotImplementedError

    def _grad_log_density(self, x):
        raise NotImplementedError

    def support_bounds(self):
        """Lower and upper corners of the compact support box.

        ``support_box`` may be ``None`` (the default half-width), a scalar
        half-width or a ``(lower, upper)`` pair.
        """
        box = DEFAULT_BOX if self.support_box is None else self.support_box
        if np.ndim(box) == 0:
            box = (-float(box), float(box))
        lo, hi = box
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (self.dim,)).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (self.dim,)).copy()
        if np.any(lo >= hi):
            raise ContractViolation("support_box lower bound must be < upper")
        return lo, hi

    def initial_point(self, rng):
        """Random starting point; standard normal draws unless overridden."""
        return rng.standard_normal(self.dim)


class GaussianTarget(TargetModel):
    """Multivariate normal ``N(mean, covariance)``.

    Drops ``-0.5 * log det(2 pi covariance)``.
    """

    def __init__(self, mean, covariance, support_box=None):
        self.mean = check_vector(mean, name="mean")
        self.dim = self.mean.shape[0]
        cov = np.atleast_2d(np.asarray(covariance, dtype=float))
        if cov.shape != (self.dim, self.dim):
            raise ContractViolation(
                f"covariance shape {cov.shape} does not match mean")
        if not np.allclose(cov, cov.T):
            raise ContractViolation("covariance must be symmetric")
        try:
            self._chol = linalg.cholesky(cov, lower=True)
        except linalg.LinAlgError as exc:
            raise SingularCovarianceError(
                "covariance is not positive definite") from exc
        self.covariance = cov
        self.precision = linalg.cho_solve((self._chol, True), np.eye(self.dim))
        self.support_box = support_box

    def _log_density(self, x):
        r = x - self.mean
        return -0.5 * r @ self.precision @ r

    def _grad_log_density(self, x):
        return -self.precision @ (x - self.mean)

    def initial_point(self, rng):
        return self.mean + self._chol @ rng.standard_normal(self.dim)


def ill_conditioned_gaussian(dim=10, condition=100.0, seed=0):
    """Zero-mean Gaussian with a randomly rotated, log-spaced spectrum.

    Variances run from 1 down to ``1 / condition``.
    """
    variances = np.logspace(0.0, -np.log10(condition), dim)
    if dim == 1:
        rot = np.eye(1)
    else:
        rot = stats.ortho_group.rvs(dim, random_state=seed)
    cov = (rot * variances) @ rot.T
    return GaussianTarget(np.zeros(dim), 0.5 * (cov + cov.T))


class LogisticRegressionModel(TargetModel):
    """Bayesian logistic regression with a Gaussian prior.

    The state is ``(beta_0, beta_1, ..., beta_D)``.  Labels are in
    ``{-1, +1}``.  Drops the prior normalising constants.
    """

    def __init__(self, X, y, prior_variance=100.0, support_box=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ContractViolation(
                f"X {X.shape} and y {y.shape} are not aligned")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ContractViolation("labels must be -1 or +1")
        self.X = X
        self.y = y
        self.prior_variance = check_positive(prior_variance, "prior_variance")
        self.dim = X.shape[1] + 1
        # rows of yX carry the label so margins are one matvec
        self._yX = np.column_stack([np.ones(len(y)), X]) * y[:, None]
        self.support_box = support_box

    def _log_density(self, x):
        margin = self._yX @ x
        return (-np.sum(np.logaddexp(0.0, -margin))
                - 0.5 * (x @ x) / self.prior_variance)

    def _grad_log_density(self, x):
        margin = self._yX @ x
        return self._yX.T @ special.expit(-margin) - x / self.prior_variance

    def initial_point(self, rng):
        return 0.1 * rng.standard_normal(self.dim)


def simulate_logistic_data(n=200, n_features=5, seed=0, scale=1.0):
    """Synthetic classification data with standard normal features.

    Returns ``(X, y, coef)`` where ``coef[0]`` is the intercept.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, n_features))
    coef = scale * rng.standard_normal(n_features + 1)
    prob = special.expit(coef[0] + X @ coef[1:])
    y = np.where(rng.uniform(size=n) < prob, 1.0, -1.0)
    return X, y, coef


def lgc_covariance(d, sigma2, beta):
    """Exponential covariance on a ``d x d`` grid, cells in row-major order."""
    ii, jj = np.divmod(np.arange(d * d), d)
    dist = np.hypot(ii[:, None] - ii[None, :], jj[:, None] - jj[None, :])
    return sigma2 * np.exp(-dist / (beta * d))


def _lgc_cholesky(d, sigma2, beta):
    cov = lgc_covariance(d, sigma2, beta)
    try:
        return cov, linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularCovarianceError(
            f"LGC covariance not positive definite for d={d}, "
            f"sigma2={sigma2}, beta={beta}") from exc


class LogGaussianCoxModel(TargetModel):
    """Log-Gaussian Cox process on a regular ``d x d`` grid.

    Counts are Poisson with mean ``s * exp(x_ij)``, ``s = 1 / d**2``, and the
    latent field ``x`` has a Gaussian prior with constant mean ``mu`` and
    exponential covariance.  Hyperparameters are held fixed; the state is the
    flattened latent field.

    Drops ``sum(y log s - log y!)`` and the Gaussian log-determinant.
    """

    def __init__(self, counts, mu, sigma2, beta, support_box=None):
        counts = np.asarray(counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ContractViolation("counts must be a square d x d array")
        if np.any(counts < 0) or np.any(counts != np.round(counts)):
            raise ContractViolation("counts must be nonnegative integers")
        self.d = counts.shape[0]
        self.counts = counts.astype(float)
        self.mu = float(mu)
        self.sigma2 = check_positive(sigma2, "sigma2")
        self.beta = check_positive(beta, "beta")
        self.scale = 1.0 / self.d ** 2
        self.dim = self.d * self.d
        self.covariance, self._chol = _lgc_cholesky(self.d, self.sigma2,
                                                    self.beta)
        self._y = self.counts.ravel()
        self.support_box = support_box

    def _prior_solve(self, r):
        return linalg.cho_solve((self._chol, True), r)

    def _log_density(self, x):
        r = x - self.mu
        return (self._y @ x - self.scale * np.sum(np.exp(x))
                - 0.5 * r @ self._prior_solve(r))

    def _grad_log_density(self, x):
        return (self._y - self.scale * np.exp(x)
                - self._prior_solve(x - self.mu))

    def initial_point(self, rng):
        return self.mu + self._chol @ rng.standard_normal(self.dim)


def simulate_lgc_data(d, mu, sigma2, beta, seed=None):
    """Draw ``(counts, latent)`` from the LGC generative model.

    Both are ``d x d`` arrays; counts are Poisson with mean
    ``exp(latent) / d**2``.
    """
    if d < 2:
        raise ContractViolation("grid side d must be at least 2")
    check_positive(sigma2, "sigma2")
    check_positive(beta, "beta")
    rng = np.random.default_rng(seed)
    _, chol = _lgc_cholesky(d, sigma2, beta)
    latent = mu + chol @ rng.standard_normal(d * d)
    counts = rng.poisson(np.exp(latent) / d ** 2)
    return counts.reshape(d, d), latent.reshape(d, d)


def _log_cosh(a):
    return np.logaddexp(a, -a) - np.log(2.0)


class StochasticVolatilityModel(TargetModel):
    """AR(1) stochastic volatility model in unconstrained coordinates.

    The state is ``(x_1..x_T, log beta, alpha, gamma)`` with
    ``phi = tanh(alpha)`` and ``sigma = exp(gamma)``.  Priors: ``p(beta)``
    proportional to ``1 / beta`` (flat in ``log beta``), ``(phi + 1) / 2``
    Beta(20, 1.5) and ``sigma**2`` scaled-inv-chi2(10, 0.05).

    Drops the Gaussian ``2 pi`` terms, the Beta and inverse-chi-square
    normalisers and the ``log 2`` factors from the change of variables.
    """

    phi_prior = (20.0, 1.5)
    sigma2_prior = (10.0, 0.05)

    def __init__(self, y, support_box=None):
        self.y = check_vector(y, name="y")
        self.T = self.y.shape[0]
        if self.T < 2:
            raise ContractViolation("need at least two observations")
        self._y2 = self.y ** 2
        self.dim = self.T + 3
        self.support_box = support_box

    @staticmethod
    def constrain(theta):
        """Map an unconstrained state to ``(x, beta, phi, sigma)``."""
        theta = np.asarray(theta, dtype=float)
        return theta[:-3], np.exp(theta[-3]), np.tanh(theta[-2]), np.exp(theta[-1])

    @staticmethod
    def unconstrain(x, beta, phi, sigma):
        if not abs(phi) < 1:
            raise StationarityError(f"|phi| must be < 1, got {phi}")
        return np.concatenate([np.asarray(x, dtype=float),
                               [np.log(beta), np.arctanh(phi), np.log(sigma)]])

    def log_joint(self, theta, jacobian=True):
        """Log-joint; ``jacobian=False`` drops the ``phi`` and ``sigma``
        change-of-variables terms (the ``log beta`` coordinate is flat either
        way)."""
        theta = check_vector(theta, self.dim, name="theta")
        return float(self._log_joint(theta, jacobian))

    def _log_joint(self, theta, jacobian):
        x, lb, a, g = theta[:-3], theta[-3], theta[-2], theta[-1]
        phi = np.tanh(a)
        lcosh = _log_cosh(a)
        log1m_phi2 = -2.0 * lcosh               # log(1 - phi^2)
        inv_s2 = np.exp(-2.0 * g)
        resid = x[1:] - phi * x[:-1]
        lp = np.sum(-lb - 0.5 * x - 0.5 * self._y2 * np.exp(-x - 2.0 * lb))
        lp += -g + 0.5 * log1m_phi2 - 0.5 * x[0] ** 2 * (1 - phi ** 2) * inv_s2
        lp += -(self.T - 1) * g - 0.5 * inv_s2 * (resid @ resid)
        a_beta, b_beta = self.phi_prior
        # log(1 + phi) and log(1 - phi) up to log 2
        lp += (a_beta - 1) * (a - lcosh) + (b_beta - 1) * (-a - lcosh)
        nu, s2 = self.sigma2_prior
        # density of sigma^2 carried over to sigma: extra factor 2 sigma
        lp += -(nu / 2 + 1) * 2.0 * g - 0.5 * nu * s2 * inv_s2 + g
        if jacobian:
            lp += g + log1m_phi2
        return lp

    def _log_density(self, theta):
        return self._log_joint(theta, True)

    def _grad_log_density(self, theta):
        x, lb, a, g = theta[:-3], theta[-3], theta[-2], theta[-1]
        phi = np.tanh(a)
        one_m_phi2 = 1.0 - phi ** 2
        inv_s2 = np.exp(-2.0 * g)
        resid = x[1:] - phi * x[:-1]
        lik = self._y2 * np.exp(-x - 2.0 * lb)

        grad = np.empty_like(theta)
        gx = -0.5 + 0.5 * lik
        gx[0] -= x[0] * one_m_phi2 * inv_s2
        gx[1:] -= resid * inv_s2
        gx[:-1] += phi * resid * inv_s2
        grad[:-3] = gx
        grad[-3] = -self.T + np.sum(lik)

        a_beta, b_beta = self.phi_prior
        dphi = (-phi / one_m_phi2 + x[0] ** 2 * phi * inv_s2
                + inv_s2 * (resid @ x[:-1])
                + (a_beta - 1) / (1 + phi) - (b_beta - 1) / (1 - phi))
        grad[-2] = one_m_phi2 * dphi - 2.0 * phi

        nu, s2 = self.sigma2_prior
        grad[-1] = (-1.0 + x[0] ** 2 * one_m_phi2 * inv_s2
                    - (self.T - 1) + inv_s2 * (resid @ resid)
                    - (nu + 2) + nu * s2 * inv_s2 + 1.0
                    + 1.0)
        return grad

    def initial_point(self, rng):
        x = 0.1 * rng.standard_normal(self.T)
        return np.concatenate([x, [0.0, np.arctanh(0.9), np.log(0.2)]])


def simulate_sv_data(T, beta, phi, sigma, seed=None, return_latent=False):
    """Simulate observations from the stochastic volatility model."""
    if not abs(phi) < 1:
        raise StationarityError(f"|phi| must be < 1, got {phi}")
    check_positive(sigma, "sigma")
    check_positive(beta, "beta")
    rng = np.random.default_rng(seed)
    x = np.empty(T)
    x[0] = rng.normal(0.0, sigma / np.sqrt(1 - phi ** 2))
    eta = rng.normal(0.0, sigma, size=T - 1)
    for t in range(1, T):
        x[t] = phi * x[t - 1] + eta[t - 1]
    y = rng.standard_normal(T) * beta * np.exp(0.5 * x)
    if return_latent:
        return y, x
    return y


def load_csv(path):
    """Read a numeric CSV with one header row into a float array."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data
