import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wienervar.core.exceptions import EstimationError, EvaluationError
from wienervar.core.statistics import (
    combined_stderr,
    effective_sample_size,
    grouped_jackknife_stderr,
    is_monotone,
    log_mean_exp_estimate,
    max_summand_share,
    mean_estimate,
    normalized_weights,
)
from wienervar.schemas.estimate import Estimate

finite_logs = st.lists(st.floats(-50, 50), min_size=2, max_size=40)


def test_mean_estimate():
    estimate = mean_estimate(np.array([1.0, 2.0, 3.0, 4.0]), seed=9)
    assert estimate.value == pytest.approx(2.5)
    assert estimate.stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
    assert estimate.n_samples == 4 and estimate.seed == 9


def test_mean_estimate_rejects_nonfinite():
    with pytest.raises(EvaluationError) as exc:
        mean_estimate(np.array([1.0, np.inf, 2.0, np.nan]), seed=0)
    assert exc.value.context["first_path_index"] == 1
    assert exc.value.context["count"] == 2


def test_log_mean_exp_of_constants_is_exact():
    estimate = log_mean_exp_estimate(np.full(10, 0.5), seed=0)
    assert estimate.value == pytest.approx(0.5, abs=1e-15)
    assert estimate.stderr == 0.0


def test_rejected_paths_count_as_zero():
    estimate = log_mean_exp_estimate(np.array([0.0, -np.inf]), seed=0)
    assert estimate.value == pytest.approx(math.log(0.5))


def test_all_rejected_is_an_estimation_error():
    with pytest.raises(EstimationError):
        log_mean_exp_estimate(np.full(3, -np.inf), seed=0)


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_invalid_log_terms(bad):
    with pytest.raises(EvaluationError):
        log_mean_exp_estimate(np.array([0.0, bad]), seed=0)


def test_log_mean_exp_does_not_overflow():
    estimate = log_mean_exp_estimate(np.array([1000.0, 1000.0]), seed=0)
    assert estimate.value == pytest.approx(1000.0)


@given(finite_logs)
def test_log_mean_exp_matches_direct_formula(values):
    x = np.array(values)
    assert log_mean_exp_estimate(x, 0).value == pytest.approx(float(np.log(np.mean(np.exp(x)))), rel=1e-9, abs=1e-9)


@given(finite_logs, st.floats(-20, 20))
def test_log_mean_exp_shift_equivariance(values, shift):
    x = np.array(values)
    assert log_mean_exp_estimate(x + shift, 0).value == pytest.approx(
        log_mean_exp_estimate(x, 0).value + shift, rel=1e-9, abs=1e-9
    )


def test_log_mean_exp_stderr_is_the_delta_method():
    x = np.array([0.0, 0.5, -1.0, 2.0, 0.25])
    m = np.mean(np.exp(x))
    expected = np.std(np.exp(x), ddof=1) / math.sqrt(x.size) / m
    assert log_mean_exp_estimate(x, 0).stderr == pytest.approx(expected, rel=1e-12)


def test_max_summand_share():
    assert max_summand_share(np.zeros(4)) == pytest.approx(0.25)
    assert max_summand_share(np.array([0.0, -np.inf])) == pytest.approx(1.0)


@given(finite_logs)
def test_normalized_weights_sum_to_one(values):
    w = normalized_weights(np.array(values))
    assert np.sum(w) == pytest.approx(1.0)
    assert np.all(w >= 0)
    assert 1.0 - 1e-9 <= effective_sample_size(w) <= len(values) + 1e-9


def test_normalized_weights_reject_all_vanishing():
    with pytest.raises(EstimationError):
        normalized_weights(np.full(3, -np.inf))


def test_combined_stderr():
    a = Estimate(value=0.0, stderr=3.0, n_samples=2, seed=0)
    b = Estimate(value=0.0, stderr=4.0, n_samples=2, seed=0)
    assert combined_stderr(a, b) == pytest.approx(5.0)


def test_grouped_jackknife_matches_classical_stderr_for_the_mean():
    samples = np.random.default_rng(1).standard_normal(5000)
    jackknife = grouped_jackknife_stderr(lambda mask: float(np.mean(samples[mask])), samples.size)
    classical = np.std(samples, ddof=1) / math.sqrt(samples.size)
    assert 0.6 * classical < jackknife < 1.4 * classical


def test_is_monotone():
    assert is_monotone([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], increasing=True)
    assert not is_monotone([1.0, 0.5], [0.0, 0.0], increasing=True)
    assert is_monotone([1.0, 0.9], [0.1, 0.1], increasing=True)
    assert is_monotone([3.0, 2.0], [0.0, 0.0], increasing=False)
