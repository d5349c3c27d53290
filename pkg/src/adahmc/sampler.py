"""Adaptive HMC driver and estimator-style wrappers.

Each run derives three independent random streams from its seed: one for
the starting point, one for the HMC kernel and one for the adaptation coin
flips.  Turning adaptation off therefore leaves the HMC stream untouched,
which is what makes a non-adaptive run reproduce plain HMC bit for bit.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import ContractViolation, as_seed_sequence, check_vector
from .bayes_opt import ScaleState, Schedules, adapt_probability, propose_next, update_scale
from .gp import DEFAULT_KERNEL_WIDTH, DEFAULT_NOISE, RewardDataset, SearchSpace, add_observation
from .hmc import ChainState, HyperParams, hmc_transition
from .objective import SampleWindow, esjd_reward


def child_seed(seed, index):
    """Deterministic child ``SeedSequence``; independent of sibling count."""
    ss = as_seed_sequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (index,))


def _streams(seed):
    return [np.random.default_rng(child_seed(seed, j)) for j in range(3)]


@dataclass
class AdaptiveRunConfig:
    space: SearchSpace
    gamma0: HyperParams
    burnin: int
    n_samples: int
    schedules: Schedules = field(default_factory=Schedules)
    window: int = None
    seed: object = None
    noise: float = DEFAULT_NOISE
    kernel_width: float = DEFAULT_KERNEL_WIDTH
    adapt: bool = True
    fixed_length: bool = False
    collapsed: bool = True
    x0: np.ndarray = None
    reward_fn: object = None

    def __post_init__(self):
        if self.burnin < 0 or self.n_samples < 1:
            raise ContractViolation("need burnin >= 0 and n_samples >= 1")
        if self.window is None:
            self.window = max(self.burnin // self.schedules.k, 1)
        if self.window < 1:
            raise ContractViolation("window length m must be >= 1")
        if self.adapt and not self.space.contains(self.gamma0):
            raise ContractViolation(f"{self.gamma0} lies outside the search space")

    @property
    def n_rounds(self):
        return math.ceil((self.burnin + self.n_samples) / self.window)


@dataclass(frozen=True)
class RoundRecord:
    i: int
    gamma: HyperParams
    reward: float
    p: float
    s: float
    adapted: bool
    phase: str


@dataclass
class AdaptationTrace:
    rounds: list = field(default_factory=list)
    total_leapfrog: int = 0

    def __len__(self):
        return len(self.rounds)

    def gammas(self):
        return [r.gamma for r in self.rounds]


@dataclass
class RunResult:
    samples: np.ndarray
    trace: AdaptationTrace
    records: list
    sampling_leapfrog: int
    dataset: RewardDataset = None

    @property
    def sampling_records(self):
        return self.records[len(self.records) - self.samples.shape[0]:]


def run_adaptive(model, config):
    """Run HMC while re-tuning ``(eps, L)`` by Bayesian optimisation.

    Every window of ``config.window`` transitions yields one reward; the
    reward is added to the GP dataset, the scale is updated and, with
    probability ``p_i``, the next setting is the acquisition argmax.
    Adaptation never stops; samples are the post-burn-in transition outputs.
    """
    init_rng, hmc_rng, adapt_rng = _streams(config.seed)
    x0 = config.x0
    if x0 is None:
        lower, upper = model.support_bounds()
        x0 = np.clip(model.initial_point(init_rng), lower, upper)
    state = ChainState.initial(model, check_vector(x0, model.dim), hmc_rng)

    reward_fn = config.reward_fn or esjd_reward
    schedules, space = config.schedules, config.space
    burnin, total = config.burnin, config.burnin + config.n_samples
    dataset = RewardDataset(space, config.noise, config.kernel_width)
    scale = ScaleState()
    gamma = config.gamma0

    samples = np.empty((config.n_samples, model.dim))
    records = []
    trace = AdaptationTrace()
    sampling_leapfrog = 0
    t = 0
    i = 0
    while t < total:
        i += 1
        start = t
        m = min(config.window, total - t)
        window = np.empty((m + 1, model.dim))
        window[0] = state.x
        ledger = 0
        window_records = []
        for j in range(1, m + 1):
            state, rec = hmc_transition(state, model, gamma, config.fixed_length)
            t += 1
            window[j] = state.x
            ledger += rec.steps_used
            if t > burnin:
                samples[t - burnin - 1] = state.x
                sampling_leapfrog += rec.steps_used
            window_records.append(rec)
        records.extend(window_records)
        trace.total_leapfrog += ledger

        reward = float(reward_fn(SampleWindow(window, ledger), window_records, gamma))
        if not np.isfinite(reward):
            raise ContractViolation(f"reward function returned {reward}")
        if space.contains(gamma):
            dataset = add_observation(dataset, gamma, reward)
        scale = update_scale(scale, reward, schedules.scale_alpha)

        next_gamma, adapted, p = gamma, False, 0.0
        if config.adapt:
            p = adapt_probability(i, schedules.k)
            if adapt_rng.uniform() < p:
                adapted = True
                next_gamma = propose_next(dataset, scale.s, i, space,
                                          schedules, p, config.collapsed)
        phase = "burnin" if start < burnin else "sampling"
        trace.rounds.append(RoundRecord(i, gamma, reward, p, scale.s,
                                        adapted, phase))
        gamma = next_gamma

    return RunResult(samples, trace, records, sampling_leapfrog, dataset)


def run_fixed(model, gamma, burnin, n_samples, seed=None, x0=None,
              fixed_length=False):
    """Plain random-length HMC at ``gamma``; the non-adaptive baseline."""
    space = SearchSpace((gamma.eps, gamma.eps), (gamma.L, gamma.L), 1)
    config = AdaptiveRunConfig(space, gamma, burnin, n_samples, seed=seed,
                               adapt=False, fixed_length=fixed_length, x0=x0)
    return run_adaptive(model, config)


class AdaptiveHMC(BaseEstimator):
    """HMC whose step size and trajectory length are tuned while sampling.

    ``fit(model)`` runs the chain and stores ``samples_``, ``trace_``,
    ``records_``, ``sampling_leapfrog_`` and ``dataset_``.  Parameters mirror
    :class:`AdaptiveRunConfig`; ``eps0`` and ``L0`` default to the lower
    corner of the search space.
    """

    def __init__(self, eps_bounds=(0.01, 0.2), L_bounds=(1, 100),
                 eps_grid_size=200, burnin=1000, n_samples=5000, window=None,
                 k=100, delta=0.1, scale_alpha=4.0, noise=DEFAULT_NOISE,
                 kernel_width=DEFAULT_KERNEL_WIDTH, eps0=None, L0=None,
                 adapt=True, fixed_length=False, random_state=None):
        self.eps_bounds = eps_bounds
        self.L_bounds = L_bounds
        self.eps_grid_size = eps_grid_size
        self.burnin = burnin
        self.n_samples = n_samples
        self.window = window
        self.k = k
        self.delta = delta
        self.scale_alpha = scale_alpha
        self.noise = noise
        self.kernel_width = kernel_width
        self.eps0 = eps0
        self.L0 = L0
        self.adapt = adapt
        self.fixed_length = fixed_length
        self.random_state = random_state

    def make_config(self, x0=None, reward_fn=None):
        space = SearchSpace(tuple(self.eps_bounds), tuple(self.L_bounds),
                            self.eps_grid_size)
        gamma0 = HyperParams(
            space.eps_bounds[0] if self.eps0 is None else self.eps0,
            space.L_bounds[0] if self.L0 is None else self.L0)
        return AdaptiveRunConfig(
            space, gamma0, self.burnin, self.n_samples,
            Schedules(self.k, self.delta, self.scale_alpha), self.window,
            self.random_state, self.noise, self.kernel_width, self.adapt,
            self.fixed_length, x0=x0, reward_fn=reward_fn)

    def fit(self, model, x0=None, reward_fn=None):
        result = run_adaptive(model, self.make_config(x0, reward_fn))
        self._store(result)
        return self

    def _store(self, result):
        self.samples_ = result.samples
        self.trace_ = result.trace
        self.records_ = result.records
        self.sampling_leapfrog_ = result.sampling_leapfrog
        self.dataset_ = result.dataset
        self.n_features_in_ = result.samples.shape[1]

    def diagnostics(self):
        from .diagnostics import report
        return report(self.samples_, self.sampling_leapfrog_,
                      self.records_[len(self.records_) - len(self.samples_):])


class FixedHMC(AdaptiveHMC):
    """Random-length HMC at a fixed ``(eps, L)``."""

    def __init__(self, eps=0.1, L=10, burnin=1000, n_samples=5000,
                 fixed_length=False, random_state=None):
        self.eps = eps
        self.L = L
        self.burnin = burnin
        self.n_samples = n_samples
        self.fixed_length = fixed_length
        self.random_state = random_state

    def fit(self, model, x0=None):
        self._store(run_fixed(model, HyperParams(self.eps, self.L),
                              self.burnin, self.n_samples,
                              self.random_state, x0, self.fixed_length))
        return self
