"""Autocorrelation, effective sample size and per-leapfrog efficiency."""

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from ._validation import ContractViolation
from .objective import acceptance_rate


class DegenerateSeriesError(ValueError):
    """Autocorrelation of a constant series is undefined."""


class DegenerateSeriesWarning(UserWarning):
    pass


def autocorrelation(series, max_lag):
    """Biased sample autocorrelations ``rho_0..rho_max_lag`` via FFT."""
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    if max_lag < 0 or n < 2 * max_lag:
        raise ContractViolation(
            f"series of length {n} is too short for max_lag={max_lag}")
    if n == 0 or np.all(x == x[0]):
        raise DegenerateSeriesError("series has zero variance")
    x = x - x.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:max_lag + 1] / n
    return acov / acov[0]


def monotone_pair_sums(rho):
    """Leading pair sums ``rho_2t + rho_2t+1`` that stay positive and
    non-increasing; the first violating pair and everything after it are
    dropped."""
    n_pairs = len(rho) // 2
    pairs = rho[:2 * n_pairs:2] + rho[1:2 * n_pairs:2]
    keep = 0
    for t in range(n_pairs):
        if pairs[t] <= 0 or (t > 0 and pairs[t] > pairs[t - 1]):
            break
        keep = t + 1
    return pairs[:keep]


def integrated_autocorrelation_time(series):
    """``1 + 2 * sum_{k>=1} rho_k`` truncated by the monotone sequence rule."""
    x = np.asarray(series, dtype=float)
    rho = autocorrelation(x, x.shape[0] // 2)
    pairs = monotone_pair_sums(rho)
    # sum of included pairs counts rho_0 = 1 once
    return -1.0 + 2.0 * pairs.sum()


def ess(series):
    """Effective sample size ``R / (1 + 2 sum rho_k)``, capped at ``R``.

    Returns 0 with a :class:`DegenerateSeriesWarning` for a constant series.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.shape[0] < 10:
        raise ContractViolation("ess needs a 1-d series of length >= 10")
    try:
        tau = integrated_autocorrelation_time(x)
    except DegenerateSeriesError:
        warnings.warn("constant series; ESS set to 0", DegenerateSeriesWarning)
        return 0.0
    n = x.shape[0]
    return float(n / max(tau, 1.0))


@dataclass
class DiagnosticsReport:
    ess: np.ndarray
    ess_min: float
    ess_median: float
    ess_max: float
    total_leapfrog: int
    ess_per_leapfrog_min: float
    ess_per_leapfrog_median: float
    ess_per_leapfrog_max: float
    acceptance_rate: float
    n_samples: int

    def summary(self):
        d = asdict(self)
        d.pop("ess")
        return d

    def to_text(self):
        """Flat ``key = value`` block; ESS/L is ESS divided by the leapfrog
        steps spent producing the samples."""
        lines = [f"{k} = {v!r}" for k, v in self.summary().items()]
        lines += [f"ess_dim_{j} = {v!r}" for j, v in enumerate(self.ess)]
        return "\n".join(lines) + "\n"


def report(samples, leapfrog_total, records=None):
    """Per-dimension ESS and ESS per leapfrog step, summarised."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.size == 0:
        raise ContractViolation("samples must be nonempty")
    if leapfrog_total <= 0:
        raise ContractViolation("leapfrog_total must be positive")
    values = np.array([ess(col) for col in samples.T])
    lo, med, hi = np.min(values), np.median(values), np.max(values)
    acc = acceptance_rate(records) if records else float("nan")
    return DiagnosticsReport(
        values, float(lo), float(med), float(hi), int(leapfrog_total),
        float(lo / leapfrog_total), float(med / leapfrog_total),
        float(hi / leapfrog_total), float(acc), samples.shape[0])
