"""Fisher-information sensitivity bounds for the number readout.

Two bounds are computed.  The quantum bound uses the number fluctuations
after the first beam splitter, F_Q = 4 Var Jz(T_t), giving the scaled
Cramer-Rao sensitivity sqrt(m)*dtheta = 1/(2 dJz(T_t)).  The classical
bound sums (dP/dtheta)^2 / P over the discrete atom-number-difference
outcomes, with the derivative taken analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .dynamics import SequenceParams, _bs_hamiltonian, dpsi_dtheta, mz_sequence, propagate
from .errors import ConfigurationError, NumericalFailure
from .spin import StateVector, collective_operators, variance
from .states import number_squeezing

__all__ = [
    "SensitivityResult",
    "DetectionErrorKernel",
    "FisherRatioReport",
    "qfi_crlb",
    "cfi",
    "detection_kernel",
    "fisher_ratio_check",
]

# Outcome probabilities below this are treated as exact zeros in the CFI sum.
_PROB_FLOOR = 1e-14
# A dropped term whose derivative exceeds sqrt(_PROB_FLOOR) is not a
# continuity zero; that signals a genuine 0/0 boundary needing smaller theta.
_DERIV_FLOOR = 1e-7


@dataclass(frozen=True)
class SensitivityResult:
    """One phase-sensitivity record: sqrt(m)*dtheta plus its provenance."""

    sqrt_m_dtheta: float
    method: str
    params: SequenceParams
    xi_in: float
    theta: float
    detection_sigma: float = 0.0
    fisher_value: float = 0.0

    def __post_init__(self):
        if self.method not in ("CRLB", "CFI", "Bayesian"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if not self.sqrt_m_dtheta > 0:
            raise ConfigurationError("sqrt_m_dtheta must be positive")


@dataclass(frozen=True)
class DetectionErrorKernel:
    """Counting-error model: rows[k] is P_error(n | true outcome k)."""

    n_atoms: int
    sigma: float
    rows: np.ndarray = field(repr=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64).copy()
        dim = self.n_atoms + 1
        if rows.shape != (dim, dim):
            raise ConfigurationError(f"kernel must be {dim}x{dim}, got {rows.shape}")
        sums = rows.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > 1e-9:
            raise ConfigurationError("kernel rows must sum to 1 after renormalization")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Convolve a vector over outcomes: out_n = sum_k values_k rows[k, n]."""
        return np.asarray(values, dtype=np.float64) @ self.rows


def detection_kernel(sigma: float, n_atoms: int) -> DetectionErrorKernel:
    """Binomial counting-error kernel of width ``sigma`` (outcome-index units).

    sigma = 0 gives the identity.  Otherwise each row is a symmetric
    binomial with M = round(4 sigma^2) trials (bumped to even so the
    center offset is an integer), p = 1/2, centered on the true outcome,
    truncated at the outcome boundaries and renormalized.
    """
    if sigma < 0:
        raise ConfigurationError("sigma must be >= 0")
    dim = n_atoms + 1
    if sigma == 0:
        return DetectionErrorKernel(n_atoms, 0.0, np.eye(dim))
    from scipy.stats import binom

    m_trials = int(round(4.0 * sigma * sigma))
    if m_trials % 2 == 1:
        m_trials += 1
    if m_trials == 0:
        return DetectionErrorKernel(n_atoms, sigma, np.eye(dim))
    pmf = binom.pmf(np.arange(m_trials + 1), m_trials, 0.5)
    rows = np.zeros((dim, dim))
    half = m_trials // 2
    for j, weight in enumerate(pmf):
        offset = j - half
        lo = max(0, -offset)
        hi = min(dim, dim - offset)
        idx = np.arange(lo, hi)
        rows[idx, idx + offset] += weight
    rows /= rows.sum(axis=1, keepdims=True)
    return DetectionErrorKernel(n_atoms, sigma, rows)


def qfi_crlb(psi_in: StateVector, params: SequenceParams) -> SensitivityResult:
    """Quantum bound from the state after the first beam splitter only."""
    after_bs = propagate(psi_in, _bs_hamiltonian(params), params.t_bs)
    jz = collective_operators(params.n_atoms).jz
    var = variance(jz, after_bs)
    fisher = 4.0 * var
    # zero variance carries no phase information; report an infinite
    # bound rather than raising
    bound = np.inf if var == 0.0 else 1.0 / (2.0 * np.sqrt(var))
    return SensitivityResult(
        sqrt_m_dtheta=float(bound),
        method="CRLB",
        params=params,
        xi_in=number_squeezing(psi_in).xi_n,
        theta=params.theta,
        detection_sigma=0.0,
        fisher_value=float(fisher),
    )


def _fisher_sum(probs: np.ndarray, dprobs: np.ndarray) -> float:
    """Sum dP^2/P with the zero-probability drop rule."""
    keep = probs > _PROB_FLOOR
    dropped = dprobs[~keep]
    if dropped.size and np.max(np.abs(dropped)) >= _DERIV_FLOOR:
        worst = float(np.max(np.abs(dropped)))
        raise NumericalFailure(
            f"outcome with P < {_PROB_FLOOR} has |dP/dtheta| = {worst}; "
            "not a continuity zero, evaluate at smaller theta"
        )
    return float(np.sum(dprobs[keep] ** 2 / probs[keep]))


def cfi(
    psi_in: StateVector,
    params: SequenceParams,
    theta: float,
    kernel: Optional[DetectionErrorKernel] = None,
) -> SensitivityResult:
    """Classical Fisher information of the number measurement at ``theta``."""
    if not np.isfinite(theta):
        raise ConfigurationError("theta must be finite")
    pt = params.with_theta(theta)
    psi_out = mz_sequence(psi_in, pt)
    dpsi = dpsi_dtheta(psi_in, pt)
    probs = np.abs(psi_out.amplitudes) ** 2
    dprobs = 2.0 * np.real(np.conj(psi_out.amplitudes) * dpsi)
    sigma = 0.0
    if kernel is not None:
        if kernel.n_atoms != params.n_atoms:
            raise ConfigurationError("kernel dimension mismatch")
        probs = kernel.apply(probs)
        dprobs = kernel.apply(dprobs)
        sigma = kernel.sigma
    fisher = _fisher_sum(probs, dprobs)
    bound = np.inf if fisher == 0.0 else 1.0 / np.sqrt(fisher)
    return SensitivityResult(
        sqrt_m_dtheta=float(bound),
        method="CFI",
        params=pt,
        xi_in=number_squeezing(psi_in).xi_n,
        theta=theta,
        detection_sigma=sigma,
        fisher_value=fisher,
    )


class FisherRatioReport(NamedTuple):
    f_classical: float
    f_quantum: float
    ratio: float


def fisher_ratio_check(
    psi_in: StateVector, params: SequenceParams, theta: float
) -> FisherRatioReport:
    """Verify the information inequality F <= F_Q at one configuration."""
    f_c = cfi(psi_in, params, theta).fisher_value
    f_q = qfi_crlb(psi_in, params).fisher_value
    if f_q == 0.0:
        ratio = 0.0 if f_c <= 1e-8 else np.inf
    else:
        ratio = f_c / f_q
    if ratio > 1.0 + 1e-8:
        raise NumericalFailure(
            f"classical Fisher {f_c} exceeds quantum bound {f_q} (ratio {ratio})"
        )
    return FisherRatioReport(f_c, f_q, float(ratio))
