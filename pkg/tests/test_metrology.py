"""Quantum and classical Fisher-information bounds, detection-error kernel."""

import math

import numpy as np
import pytest

from mzbec import (
    ConfigurationError,
    NumericalFailure,
    SequenceParams,
    binomial_state,
    cfi,
    detection_kernel,
    fisher_ratio_check,
    mz_sequence,
    outcome_distribution,
    qfi_crlb,
    squeezed_ground_state,
    twin_fock,
)
from mzbec.metrology import SensitivityResult, _fisher_sum
from oracles import fisher_sum_reference


def test_noninteracting_twin_fock_quantum_bound():
    # Var Jz after a pi/2 split of the twin Fock state is N(N+2)/8,
    # so sqrt(m)*dtheta*N = N / sqrt(N(N+2)/2)
    n = 100
    params = SequenceParams.standard(n, u0n=0.0)
    res = qfi_crlb(twin_fock(n), params)
    want = 1.0 / math.sqrt(n * (n + 2) / 2.0)
    assert res.sqrt_m_dtheta == pytest.approx(want, abs=1e-15)
    assert res.fisher_value == pytest.approx(n * (n + 2) / 2.0, rel=1e-12)
    assert res.method == "CRLB"


@pytest.mark.parametrize("n", [50, 100, 400])
def test_noninteracting_binomial_is_shot_noise_limited(n):
    params = SequenceParams.standard(n, u0n=0.0)
    res = qfi_crlb(binomial_state(n), params)
    assert res.sqrt_m_dtheta * math.sqrt(n) == pytest.approx(1.0, abs=1e-12)
    got = cfi(binomial_state(n), params, 0.01)
    assert got.fisher_value == pytest.approx(n, abs=1e-9)


def test_cfi_saturates_quantum_bound_without_interactions():
    n = 100
    params = SequenceParams.standard(n, u0n=0.0)
    report = fisher_ratio_check(twin_fock(n), params, 1e-3)
    assert report.ratio == pytest.approx(1.0, abs=1e-7)


def test_fisher_ratio_below_one_with_interactions():
    # long interacting splitters degrade the number readout well below
    # the quantum bound
    params = SequenceParams.standard(100, u0n=1.0, t_bs=20.0)
    report = fisher_ratio_check(binomial_state(100), params, 0.01)
    assert 0.0 < report.ratio < 0.5


def test_fisher_sum_matches_plain_loop():
    rng = np.random.default_rng(0)
    probs = rng.random(21)
    probs /= probs.sum()
    dprobs = rng.normal(size=21) * 0.01
    assert _fisher_sum(probs, dprobs) == pytest.approx(
        fisher_sum_reference(probs, dprobs), rel=1e-12
    )


def test_fisher_sum_rejects_nonzero_derivative_on_dead_outcome():
    probs = np.array([0.0, 0.5, 0.5])
    dprobs = np.array([1e-3, 0.01, -0.01])
    with pytest.raises(NumericalFailure, match="smaller theta"):
        _fisher_sum(probs, dprobs)


def test_fisher_sum_tolerates_continuity_zeros():
    probs = np.array([0.0, 0.5, 0.5])
    dprobs = np.array([1e-9, 0.01, -0.01])
    assert _fisher_sum(probs, dprobs) == pytest.approx(2 * 0.01**2 / 0.5)


def test_zero_variance_reports_infinite_bound():
    # omega = 0 leaves a Jz eigenstate trapped: no phase information
    params = SequenceParams.standard(10, u0n=1.0, omega=0.0)
    res = qfi_crlb(twin_fock(10), params)
    assert res.sqrt_m_dtheta == np.inf
    assert res.fisher_value == 0.0


def test_kernel_identity_at_zero_sigma():
    k = detection_kernel(0.0, 10)
    np.testing.assert_array_equal(k.rows, np.eye(11))


def test_kernel_rows_are_renormalized_binomials():
    n, sigma = 20, 2.0
    k = detection_kernel(sigma, n)
    assert k.rows.shape == (n + 1, n + 1)
    np.testing.assert_allclose(k.rows.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(k.rows >= 0)
    # interior row: full binomial with M = round(4 sigma^2) trials
    m_trials = int(round(4 * sigma * sigma))
    from scipy.stats import binom

    pmf = binom.pmf(np.arange(m_trials + 1), m_trials, 0.5)
    row = k.rows[n // 2]
    lo = n // 2 - m_trials // 2
    np.testing.assert_allclose(row[lo : lo + m_trials + 1], pmf, atol=1e-12)


def test_kernel_trial_count_bumped_to_even():
    # sigma^2 = 1.25 gives 4 sigma^2 = 5, bumped to 6 so offsets center
    k = detection_kernel(math.sqrt(1.25), 8)
    row = k.rows[4]
    assert np.count_nonzero(row) == 7


def test_kernel_apply_preserves_total_probability():
    n = 30
    k = detection_kernel(3.0, n)
    dist = outcome_distribution(
        mz_sequence(twin_fock(n), SequenceParams.standard(n, theta=0.3))
    )
    blurred = k.apply(dist.probs)
    assert blurred.sum() == pytest.approx(1.0, abs=1e-12)
    # blurring can only flatten the distribution
    assert blurred.max() <= dist.probs.max() + 1e-12


def test_kernel_negative_sigma_rejected():
    with pytest.raises(ConfigurationError):
        detection_kernel(-1.0, 10)


def test_kernel_reduces_classical_information():
    n = 100
    params = SequenceParams.standard(n, u0n=1.0, t_bs=2.0, t_phase=10.0)
    clean = cfi(twin_fock(n), params, 0.01)
    noisy = cfi(twin_fock(n), params, 0.01, detection_kernel(2.0, n))
    assert noisy.fisher_value < clean.fisher_value
    assert noisy.detection_sigma == 2.0
    assert clean.detection_sigma == 0.0


def test_kernel_dimension_mismatch_rejected():
    params = SequenceParams.standard(10)
    with pytest.raises(ConfigurationError):
        cfi(twin_fock(10), params, 0.01, detection_kernel(1.0, 12))


def test_cfi_rejects_nonfinite_theta():
    with pytest.raises(ConfigurationError):
        cfi(twin_fock(4), SequenceParams.standard(4), np.nan)


def test_sensitivity_result_validation():
    params = SequenceParams.standard(4)
    with pytest.raises(ConfigurationError):
        SensitivityResult(0.1, "magic", params, 1.0, 0.01)
    with pytest.raises(ConfigurationError):
        SensitivityResult(-0.1, "CFI", params, 1.0, 0.01)


def test_squeezed_input_interpolates_quantum_bound():
    n = 100
    params = SequenceParams.standard(n, u0n=0.0)
    twin = qfi_crlb(twin_fock(n), params).sqrt_m_dtheta
    coherent = qfi_crlb(binomial_state(n), params).sqrt_m_dtheta
    mid = qfi_crlb(squeezed_ground_state(n, 0.5), params).sqrt_m_dtheta
    assert twin < mid < coherent
