"""
Estimators shared by the Monte Carlo services.
"""

import math
from typing import Callable, Sequence

import numpy as np

from wienervar.core.exceptions import EstimationError, EvaluationError
from wienervar.schemas.estimate import Estimate


def mean_estimate(samples: np.ndarray, seed: int) -> Estimate:
    """Sample mean with stderr = sd / sqrt(n)."""
    samples = np.asarray(samples, dtype=float)
    if not np.all(np.isfinite(samples)):
        bad = np.flatnonzero(~np.isfinite(samples))
        raise EvaluationError(
            "non-finite Monte Carlo summand",
            first_path_index=int(bad[0]),
            count=int(bad.size),
        )
    n = samples.size
    value = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(value=value, stderr=stderr, n_samples=n, seed=seed)


def log_mean_exp_estimate(log_terms: np.ndarray, seed: int) -> Estimate:
    """
    log of the mean of exp(log_terms), stderr by the delta method.

    Terms equal to -inf are rejected paths and contribute zero to the mean.
    The largest term is factored out so the mean never overflows.
    """
    log_terms = np.asarray(log_terms, dtype=float)
    if np.any(np.isnan(log_terms)) or np.any(log_terms == np.inf):
        bad = np.flatnonzero(np.isnan(log_terms) | (log_terms == np.inf))
        raise EvaluationError("invalid log-summand", first_path_index=int(bad[0]), count=int(bad.size))
    n = log_terms.size
    accepted = np.isfinite(log_terms)
    if not np.any(accepted):
        raise EstimationError("all paths rejected", n_samples=n)
    shift = float(np.max(log_terms[accepted]))
    scaled = np.exp(log_terms - shift)
    m = float(np.mean(scaled))
    se = float(np.std(scaled, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(value=shift + math.log(m), stderr=se / m, n_samples=n, seed=seed)


def max_summand_share(log_terms: np.ndarray) -> float:
    """Largest share a single path holds in the sum of exp(log_terms)."""
    log_terms = np.asarray(log_terms, dtype=float)
    finite = log_terms[np.isfinite(log_terms)]
    if finite.size == 0:
        return float("nan")
    scaled = np.exp(finite - np.max(finite))
    return float(np.max(scaled) / np.sum(scaled))


def combined_stderr(*estimates: Estimate) -> float:
    """Root-sum-square of standard errors."""
    return math.sqrt(sum(e.stderr ** 2 for e in estimates))


def normalized_weights(log_weights: np.ndarray) -> np.ndarray:
    """Self-normalized importance weights; they sum to one."""
    log_weights = np.asarray(log_weights, dtype=float)
    finite = np.isfinite(log_weights)
    if not np.any(finite):
        raise EstimationError("all importance weights vanish")
    scaled = np.where(finite, np.exp(log_weights - np.max(log_weights[finite])), 0.0)
    return scaled / np.sum(scaled)


def effective_sample_size(weights: np.ndarray) -> float:
    """Kish effective sample size of normalized weights."""
    return float(1.0 / np.sum(np.square(weights)))


def grouped_jackknife_stderr(
    statistic: Callable[[np.ndarray], float],
    n: int,
    groups: int = 50,
) -> float:
    """
    Delete-a-group jackknife standard error.

    `statistic` receives a boolean mask of the retained samples.
    """
    groups = max(2, min(groups, n))
    edges = np.linspace(0, n, groups + 1).astype(int)
    replicates = np.empty(groups)
    for g in range(groups):
        mask = np.ones(n, dtype=bool)
        mask[edges[g]:edges[g + 1]] = False
        replicates[g] = statistic(mask)
    centered = replicates - replicates.mean()
    return float(math.sqrt((groups - 1) / groups * np.sum(centered ** 2)))


def is_monotone(values: Sequence[float], stderrs: Sequence[float], increasing: bool, n_sigma: float = 3.0) -> bool:
    """Pairwise monotonicity of consecutive estimates up to n_sigma combined stderr."""
    for (a, sa), (b, sb) in zip(zip(values, stderrs), zip(values[1:], stderrs[1:])):
        slack = n_sigma * math.hypot(sa, sb)
        if increasing and b < a - slack:
            return False
        if not increasing and b > a + slack:
            return False
    return True
