"""Hamiltonian Monte Carlo transition kernel with identity mass matrix."""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import ContractViolation, check_vector


class IntegrationDivergence(FloatingPointError):
    """Leapfrog produced a non-finite gradient.

    ``step`` is the 1-based index of the leapfrog step that failed.
    """

    def __init__(self, step):
        super().__init__(f"non-finite gradient at leapfrog step {step}")
        self.step = step


@dataclass(frozen=True)
class HyperParams:
    """Step size ``eps`` and maximum leapfrog count ``L``."""

    eps: float
    L: int

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ContractViolation(f"eps must be positive, got {self.eps}")
        if int(self.L) != self.L or self.L < 1:
            raise ContractViolation(f"L must be an integer >= 1, got {self.L}")
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "L", int(self.L))


@dataclass
class ChainState:
    """Current position of a chain plus cached density information."""

    x: np.ndarray
    log_density: float
    grad: np.ndarray
    rng: np.random.Generator
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def initial(cls, model, x, rng):
        x = check_vector(x, model.dim)
        lower, upper = model.support_bounds()
        if np.any(x < lower) or np.any(x > upper):
            raise ContractViolation("initial point lies outside support box")
        logp = float(model._log_density(x))
        if not np.isfinite(logp):
            raise ContractViolation("log density is not finite at x0")
        return cls(x, logp, model._grad_log_density(x), rng, lower, upper)


@dataclass(frozen=True)
class TransitionRecord:
    accepted: bool
    steps_used: int
    squared_jump: float
    energy_error: float
    divergent: bool = False
    outside_support: bool = False


def hamiltonian(model, x, p):
    """Potential ``-log pi(x)`` plus kinetic ``|p|^2 / 2``."""
    p = np.asarray(p, dtype=float)
    return -model.log_density(x) + 0.5 * float(p @ p)


def _integrate(model, x, p, grad, eps, n_steps):
    """Run ``n_steps`` kick-drift-kick updates; returns ``(x, p, grad)``."""
    x = x.copy()
    p = p + 0.5 * eps * grad
    for step in range(1, n_steps + 1):
        x += eps * p
        grad = model._grad_log_density(x)
        # a sum is non-finite iff some entry is (or it overflows, which is
        # a divergence anyway)
        if not math.isfinite(grad.sum()):
            raise IntegrationDivergence(step)
        if step < n_steps:
            p += eps * grad
    p += 0.5 * eps * grad
    return x, p, grad


def leapfrog(model, x, p, eps, n_steps):
    """Integrate Hamiltonian dynamics for ``n_steps`` leapfrog steps.

    Parameters
    ----------
    model : TargetModel
    x, p : array_like
        Start position and momentum.
    eps : float
        Step size.
    n_steps : int
        Number of leapfrog steps, at least 1.

    Returns
    -------
    x_new, p_new : ndarray

    Raises
    ------
    IntegrationDivergence
        If the gradient becomes non-finite.
    """
    if n_steps < 1 or eps <= 0:
        raise ContractViolation("need n_steps >= 1 and eps > 0")
    x = check_vector(x, model.dim)
    p = check_vector(p, model.dim, name="p")
    with np.errstate(over="ignore", invalid="ignore"):
        x_new, p_new, _ = _integrate(model, x, p, model._grad_log_density(x),
                                     eps, n_steps)
    return x_new, p_new


def hmc_transition(state, model, gamma, fixed_length=False):
    """One random-length HMC transition.

    The trajectory length is drawn uniformly from ``1..gamma.L`` (unless
    ``fixed_length``), proposals outside the support box are rejected and
    divergent trajectories count as rejections.

    Returns the updated ``ChainState`` (the same object, mutated) and a
    ``TransitionRecord``.
    """
    rng = state.rng
    p0 = rng.standard_normal(model.dim)
    n_steps = gamma.L if fixed_length else int(rng.integers(1, gamma.L + 1))
    h0 = -state.log_density + 0.5 * (p0 @ p0)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        try:
            x1, p1, grad1 = _integrate(model, state.x, p0, state.grad,
                                       gamma.eps, n_steps)
        except IntegrationDivergence:
            # every transition draws exactly one uniform
            rng.uniform()
            return state, TransitionRecord(False, n_steps, 0.0, np.inf, True)
        if np.any(x1 < state.lower) or np.any(x1 > state.upper):
            rng.uniform()
            return state, TransitionRecord(False, n_steps, 0.0, np.nan,
                                           outside_support=True)
        logp1 = float(model._log_density(x1))
        h1 = -logp1 + 0.5 * (p1 @ p1)
    energy_error = h1 - h0
    if not np.isfinite(energy_error):
        rng.uniform()
        return state, TransitionRecord(False, n_steps, 0.0, np.inf, True)
    # u < exp(-dH) without overflow
    accept = np.log(rng.uniform()) < -energy_error
    if not accept:
        return state, TransitionRecord(False, n_steps, 0.0, energy_error)
    jump = x1 - state.x
    state.x, state.log_density, state.grad = x1, logp1, grad1
    return state, TransitionRecord(True, n_steps, float(jump @ jump),
                                   energy_error)
