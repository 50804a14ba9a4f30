"""Scan pipelines: N-scaling fits, accumulation-time optima, squeezing
transition curves, probability maps, Bloch-sphere Husimi grids.

Scan functions are pure (no file IO) unless an output path is supplied,
in which case CSV rows are streamed as they are computed.  Per-point
failures are recorded and the scan continues; callers decide whether
recorded failures are fatal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .dynamics import SequenceParams, _bs_hamiltonian, propagate
from .errors import ConfigurationError, NumericalFailure
from .estimation import EstimationRun, likelihood_table, monte_carlo_sensitivity
from .metrology import (
    DetectionErrorKernel,
    SensitivityResult,
    cfi,
    detection_kernel,
    qfi_crlb,
)
from .spin import StateVector, collective_operators, husimi_q, variance
from .states import binomial_state, squeezed_ground_state, twin_fock

__all__ = [
    "ScanSpec",
    "ScanFailure",
    "ScanTable",
    "PrefactorFit",
    "TeScanResult",
    "TransitionRow",
    "ProbabilityMap",
    "HusimiMap",
    "input_state",
    "scan_scaling",
    "fit_prefactor",
    "scan_te_optimum",
    "scan_xi_transition",
    "probability_map",
    "husimi_map",
    "count_local_maxima",
]

_METHODS = ("CRLB", "CFI", "Bayesian")

# below this requested squeezing the bisection target is numerically
# indistinguishable from the twin Fock limit
_XI_TWIN_CUTOFF = 0.02


def input_state(n_atoms: int, xi_in: float) -> StateVector:
    """Input-state convention shared by all scans.

    xi_in = 1 gives the binomial state, xi_in < 0.02 the twin Fock,
    anything between a number-squeezed ground state at that target.
    """
    if not (0.0 <= xi_in <= 1.0):
        raise ConfigurationError(f"xi_in must lie in [0, 1], got {xi_in!r}")
    if xi_in >= 1.0:
        return binomial_state(n_atoms)
    if xi_in < _XI_TWIN_CUTOFF:
        return twin_fock(n_atoms)
    return squeezed_ground_state(n_atoms, xi_in)


@dataclass(frozen=True)
class ScanSpec:
    """Axes and fixed parameters for a sensitivity scan.

    u0 per point is u0n / N, so u0n stays constant across an N axis;
    omega per point is pi / (2 t_bs).
    """

    n_values: tuple
    u0n: float = 1.0
    t_bs_values: tuple = (2.0,)
    t_phase_values: tuple = (10.0,)
    theta_values: tuple = (0.01,)
    xi_values: tuple = (0.0,)
    sigma_values: tuple = (0.0,)
    method: str = "CFI"
    seed: int = 0
    # Bayesian-path controls, unused by CRLB/CFI
    m: int = 20
    n_trials: int = 500
    window: tuple = (-math.pi / 4, math.pi / 4)
    n_grid: int = 1001

    def __post_init__(self):
        axes = {
            "n_values": self.n_values,
            "t_bs_values": self.t_bs_values,
            "t_phase_values": self.t_phase_values,
            "theta_values": self.theta_values,
            "xi_values": self.xi_values,
            "sigma_values": self.sigma_values,
        }
        for name, axis in axes.items():
            if len(tuple(axis)) == 0:
                raise ConfigurationError(f"axis {name} must be nonempty")
        for n in self.n_values:
            if n % 2 != 0 or n < 2:
                raise ConfigurationError(f"N values must be even and >= 2, got {n}")
        if list(self.n_values) != sorted(self.n_values):
            raise ConfigurationError("N values must be ascending")
        if self.method not in _METHODS:
            raise ConfigurationError(f"method must be one of {_METHODS}")
        for sigma in self.sigma_values:
            if sigma < 0:
                raise ConfigurationError("sigma values must be >= 0")

    def points(self):
        """Deterministic evaluation order over the cartesian product."""
        return product(
            self.n_values,
            self.t_bs_values,
            self.t_phase_values,
            self.theta_values,
            self.xi_values,
            self.sigma_values,
        )


@dataclass(frozen=True)
class ScanFailure:
    """One scan point that could not be evaluated."""

    coords: dict
    message: str


@dataclass(frozen=True)
class ScanTable:
    rows: tuple
    failures: tuple = ()


def _evaluate_point(
    spec: ScanSpec, n, t_bs, t_phase, theta, xi_in, sigma
) -> SensitivityResult:
    psi = input_state(n, xi_in)
    params = SequenceParams.standard(
        n, u0n=spec.u0n, t_bs=t_bs, t_phase=t_phase, theta=theta
    )
    if spec.method == "CRLB":
        # the quantum bound describes the state after the first BS;
        # counting error applies to the readout, not to this bound
        return qfi_crlb(psi, params)
    kernel = detection_kernel(sigma, n) if sigma > 0 else None
    if spec.method == "CFI":
        return cfi(psi, params, theta, kernel)
    run = EstimationRun(
        theta_true=theta,
        m=spec.m,
        n_trials=spec.n_trials,
        theta_lo=spec.window[0],
        theta_hi=spec.window[1],
        n_grid=spec.n_grid,
        seed=spec.seed,
    )
    outcome = monte_carlo_sensitivity(run, psi, params, kernel)
    value = outcome.sqrt_m_dtheta
    return SensitivityResult(
        sqrt_m_dtheta=value,
        method="Bayesian",
        params=params,
        xi_in=xi_in,
        theta=theta,
        detection_sigma=sigma,
        # information a bound-saturating estimator would imply
        fisher_value=0.0 if value == 0 else value**-2,
    )


def scan_scaling(spec: ScanSpec, out_path: Optional[str] = None) -> ScanTable:
    """Evaluate the scan, optionally streaming CSV rows as they finish."""
    from . import io as _io

    rows = []
    failures = []
    writer = _io.IncrementalCsvWriter(out_path) if out_path else None
    try:
        for n, t_bs, t_phase, theta, xi_in, sigma in spec.points():
            coords = {
                "N": n,
                "t_bs": t_bs,
                "t_phase": t_phase,
                "theta": theta,
                "xi_in": xi_in,
                "sigma": sigma,
            }
            try:
                result = _evaluate_point(spec, n, t_bs, t_phase, theta, xi_in, sigma)
            except (ConfigurationError, NumericalFailure) as exc:
                failures.append(ScanFailure(coords, str(exc)))
                continue
            rows.append(result)
            if writer:
                writer.write_row(result, seed=spec.seed)
        if writer:
            writer.commit()
    finally:
        if writer:
            writer.close()
    return ScanTable(tuple(rows), tuple(failures))


@dataclass(frozen=True)
class PrefactorFit:
    """Log-log fit of dtheta against N.

    ``exponent`` and ``beta_free`` come from the unconstrained least
    squares fit log(dtheta) = exponent*log(N) + log(beta_free);
    ``beta`` re-fits the amplitude with the exponent pinned to -1, the
    Heisenberg form dtheta = beta / N.
    """

    beta: float
    exponent: float
    residual: float
    n_range: tuple
    beta_free: float


def _extract_points(table) -> list:
    rows = table.rows if isinstance(table, ScanTable) else table
    points = []
    for row in rows:
        if isinstance(row, SensitivityResult):
            points.append((row.params.n_atoms, row.sqrt_m_dtheta))
        else:
            n, value = row
            points.append((int(n), float(value)))
    return points


def fit_prefactor(table) -> PrefactorFit:
    """Fit dtheta(N) on log-log axes; accepts a ScanTable, SensitivityResult
    rows, or bare (N, dtheta) pairs."""
    points = [(n, v) for n, v in _extract_points(table) if np.isfinite(v) and v > 0]
    if len(points) < 3:
        raise ConfigurationError("need at least 3 finite points to fit")
    if len(set(points)) == 1:
        raise ConfigurationError("degenerate fit data: all points equal")
    n_arr = np.array([p[0] for p in points], dtype=float)
    v_arr = np.array([p[1] for p in points], dtype=float)
    if len(set(n_arr.tolist())) < 2:
        raise ConfigurationError("need at least two distinct N values")
    log_n, log_v = np.log(n_arr), np.log(v_arr)
    slope, intercept = np.polyfit(log_n, log_v, 1)
    resid = log_v - (slope * log_n + intercept)
    beta_constrained = float(np.exp(np.mean(log_v + log_n)))
    return PrefactorFit(
        beta=beta_constrained,
        exponent=float(slope),
        residual=float(np.sqrt(np.mean(resid**2))),
        n_range=tuple(int(n) for n in sorted(set(n_arr.tolist()))),
        beta_free=float(np.exp(intercept)),
    )


@dataclass(frozen=True)
class TeScanResult:
    t_e_best: float
    t_e_worst: float
    rows: tuple


def scan_te_optimum(
    psi_in: StateVector,
    params: SequenceParams,
    t_e_values: Sequence[float],
    theta: float,
    kernel: Optional[DetectionErrorKernel] = None,
) -> TeScanResult:
    """CFI per accumulation time at fixed theta (delta_e adjusted per point)."""
    t_e_values = tuple(float(t) for t in t_e_values)
    if not t_e_values or any(t <= 0 for t in t_e_values):
        raise ConfigurationError("t_phase values must be positive")
    rows = tuple(
        cfi(psi_in, params.with_t_phase(t_e), theta, kernel) for t_e in t_e_values
    )
    values = [row.sqrt_m_dtheta for row in rows]
    return TeScanResult(
        t_e_best=t_e_values[int(np.argmin(values))],
        t_e_worst=t_e_values[int(np.argmax(values))],
        rows=rows,
    )


@dataclass(frozen=True)
class TransitionRow:
    """One squeezing-scan point, with the post-BS fluctuations for the
    quantum-bound panel."""

    xi_requested: float
    xi_in: float
    t_phase: float
    method: str
    sqrt_m_dtheta: float
    fisher_value: float
    xi_after_bs: float


def scan_xi_transition(
    n_atoms: int,
    u0n: float,
    t_bs: float,
    t_e_values: Sequence[float],
    xi_grid: Sequence[float],
    method: str = "CFI",
    theta: float = 0.01,
) -> ScanTable:
    """Sensitivity versus input number squeezing, per accumulation time."""
    if method not in ("CRLB", "CFI"):
        raise ConfigurationError("xi transition scan supports CRLB and CFI")
    xi_grid = tuple(float(x) for x in xi_grid)
    for x in xi_grid:
        if not (0.0 < x <= 1.0):
            raise ConfigurationError("xi grid values must lie in (0, 1]")
    jz = collective_operators(n_atoms).jz
    rows = []
    failures = []
    for xi_req in xi_grid:
        try:
            psi = input_state(n_atoms, xi_req)
        except NumericalFailure as exc:
            failures.append(ScanFailure({"xi_in": xi_req}, str(exc)))
            continue
        from .states import number_squeezing

        xi_actual = number_squeezing(psi).xi_n
        for t_e in t_e_values:
            params = SequenceParams.standard(
                n_atoms, u0n=u0n, t_bs=t_bs, t_phase=float(t_e), theta=theta
            )
            after_bs = propagate(psi, _bs_hamiltonian(params), params.t_bs)
            xi_out = float(
                np.sqrt(variance(jz, after_bs)) / (np.sqrt(n_atoms) / 2.0)
            )
            if method == "CRLB":
                result = qfi_crlb(psi, params)
            else:
                result = cfi(psi, params, theta)
            rows.append(
                TransitionRow(
                    xi_requested=xi_req,
                    xi_in=xi_actual,
                    t_phase=float(t_e),
                    method=method,
                    sqrt_m_dtheta=result.sqrt_m_dtheta,
                    fisher_value=result.fisher_value,
                    xi_after_bs=xi_out,
                )
            )
    return ScanTable(tuple(rows), tuple(failures))


@dataclass(frozen=True)
class ProbabilityMap:
    """P(n|theta) over a phase grid; rows indexed by theta, columns by n."""

    n_atoms: int
    theta_axis: tuple
    n_axis: tuple
    p: np.ndarray = field(repr=False)
    xi_in: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64).copy()
        if p.shape != (len(self.theta_axis), len(self.n_axis)):
            raise ConfigurationError("map shape does not match its axes")
        p.flags.writeable = False
        object.__setattr__(self, "p", p)


def probability_map(
    psi_in: StateVector, params: SequenceParams, theta_values: Sequence[float]
) -> ProbabilityMap:
    """Dense outcome-probability map over a list of phases."""
    from .states import number_squeezing

    table = likelihood_table(psi_in, params, np.asarray(theta_values, dtype=float))
    n_axis = tuple(int(n) for n in (2 * np.arange(params.n_atoms + 1) - params.n_atoms))
    return ProbabilityMap(
        n_atoms=params.n_atoms,
        theta_axis=tuple(float(t) for t in theta_values),
        n_axis=n_axis,
        p=table.probs,
        xi_in=number_squeezing(psi_in).xi_n,
    )


def count_local_maxima(probs: np.ndarray, threshold: float = 1e-4) -> int:
    """Count strict local maxima above an absolute threshold, no smoothing.

    Entries below the threshold are ignored; boundary entries count when
    they exceed their single neighbor.  The substructure peaks of the
    interacting sequence are resolved exactly on the outcome grid, so
    smoothing would destroy what this is meant to detect.
    """
    p = np.asarray(probs, dtype=float)
    count = 0
    for i in range(p.size):
        if p[i] < threshold:
            continue
        left = p[i - 1] if i > 0 else -1.0
        right = p[i + 1] if i < p.size - 1 else -1.0
        if p[i] > left and p[i] > right:
            count += 1
    return count


@dataclass(frozen=True)
class HusimiMap:
    """Husimi Q on a (polar x azimuth) product grid, rows indexed by polar."""

    n_atoms: int
    polar_axis: tuple
    azimuth_axis: tuple
    q: np.ndarray = field(repr=False)

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.float64).copy()
        if q.shape != (len(self.polar_axis), len(self.azimuth_axis)):
            raise ConfigurationError("Husimi grid shape does not match its axes")
        q.flags.writeable = False
        object.__setattr__(self, "q", q)


def husimi_map(
    psi: StateVector, n_polar: int = 61, n_azimuth: int = 121
) -> HusimiMap:
    """Husimi Q over polar in [0, pi] and azimuth in [0, 2pi)."""
    if n_polar < 2 or n_azimuth < 2:
        raise ConfigurationError("grid must have at least 2 points per axis")
    polar = np.linspace(0.0, math.pi, n_polar)
    azimuth = np.linspace(0.0, 2.0 * math.pi, n_azimuth, endpoint=False)
    pairs = [(t, p) for t in polar for p in azimuth]
    q = husimi_q(psi, pairs).reshape(n_polar, n_azimuth)
    return HusimiMap(
        n_atoms=psi.n_atoms,
        polar_axis=tuple(float(t) for t in polar),
        azimuth_axis=tuple(float(p) for p in azimuth),
        q=q,
    )
