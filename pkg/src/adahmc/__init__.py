"""Hamiltonian Monte Carlo with Bayesian-optimisation tuning of ``(eps, L)``."""

from .bayes_opt import (
    ScaleState,
    Schedules,
    adapt_probability,
    beta,
    propose_next,
    ucb_score,
    update_scale,
)
from .diagnostics import DiagnosticsReport, autocorrelation, ess, report
from .gp import (
    GPPosterior,
    GPSurrogate,
    RewardDataset,
    SearchSpace,
    add_observation,
    kernel,
    posterior,
)
from .hmc import (
    ChainState,
    HyperParams,
    IntegrationDivergence,
    TransitionRecord,
    hamiltonian,
    hmc_transition,
    leapfrog,
)
from .objective import Reward, SampleWindow, acceptance_rate, esjd, normalized_esjd
from .sampler import (
    AdaptationTrace,
    AdaptiveHMC,
    AdaptiveRunConfig,
    FixedHMC,
    run_adaptive,
    run_fixed,
)
from .targets import (
    GaussianTarget,
    LogGaussianCoxModel,
    LogisticRegressionModel,
    StochasticVolatilityModel,
    TargetModel,
    simulate_lgc_data,
    simulate_sv_data,
)

__version__ = "0.1.0"
