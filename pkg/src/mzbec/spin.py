"""Dicke-basis representation of N bosons in two modes.

States live on the (N+1)-dimensional eigenbasis of the collective Jz
operator.  Basis index i corresponds to the eigenvalue mu = i - N/2,
which is half the atom number difference between the modes; measured
outcomes are reported as n = 2*mu.  Only even N is supported so that
the balanced twin Fock state exists.

All containers are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalFailure

__all__ = [
    "StateVector",
    "CollectiveOperator",
    "OperatorSet",
    "OutcomeDistribution",
    "collective_operators",
    "expectation",
    "variance",
    "outcome_distribution",
    "husimi_q",
    "mu_values",
    "ladder_elements",
]

_NORM_TOL = 1e-10


def _check_n_atoms(n_atoms: int) -> int:
    if n_atoms < 2 or n_atoms % 2 != 0:
        raise ConfigurationError(
            f"n_atoms must be an even integer >= 2, got {n_atoms!r}"
        )
    return int(n_atoms)


def mu_values(n_atoms: int) -> np.ndarray:
    """Jz eigenvalues mu = -N/2 ... N/2 in basis order."""
    n_atoms = _check_n_atoms(n_atoms)
    return np.arange(n_atoms + 1, dtype=float) - n_atoms / 2.0


def ladder_elements(n_atoms: int) -> np.ndarray:
    """Raising-operator matrix elements <mu+1|J+|mu> = sqrt(J(J+1) - mu(mu+1)).

    Returned in basis order, length N; entry k couples indices k and k+1.
    """
    j = n_atoms / 2.0
    mu = mu_values(n_atoms)[:-1]
    return np.sqrt(j * (j + 1.0) - mu * (mu + 1.0))


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype).copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitudes over the Dicke basis of ``n_atoms`` bosons."""

    n_atoms: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_n_atoms(self.n_atoms)
        amps = _frozen_array(self.amplitudes, np.complex128)
        if amps.shape != (self.n_atoms + 1,):
            raise ConfigurationError(
                f"amplitudes must have length N+1={self.n_atoms + 1}, "
                f"got shape {amps.shape}"
            )
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > _NORM_TOL:
            raise ConfigurationError(
                f"state not normalized: sum |a|^2 = {norm_sq!r}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def mu(self) -> np.ndarray:
        return mu_values(self.n_atoms)

    @property
    def outcomes(self) -> np.ndarray:
        """Measured atom number differences n = 2*mu."""
        return 2.0 * self.mu


@dataclass(frozen=True)
class CollectiveOperator:
    """Hermitian tridiagonal operator on the Dicke basis, stored banded.

    ``diag`` holds the real diagonal; ``offdiag`` holds the superdiagonal
    entries <i|op|i+1> (the subdiagonal is their conjugate).  Jz and Jz^2
    have empty off-diagonals; Jx is real tridiagonal; Jy has purely
    imaginary off-diagonal entries.
    """

    n_atoms: int
    diag: np.ndarray = field(repr=False)
    offdiag: np.ndarray = field(repr=False)
    label: str = "custom"

    def __post_init__(self):
        _check_n_atoms(self.n_atoms)
        diag = _frozen_array(self.diag, np.float64)
        offdiag = _frozen_array(self.offdiag, np.complex128)
        if diag.shape != (self.n_atoms + 1,):
            raise ConfigurationError(
                f"diag must have length N+1={self.n_atoms + 1}, got {diag.shape}"
            )
        if offdiag.shape != (self.n_atoms,):
            raise ConfigurationError(
                f"offdiag must have length N={self.n_atoms}, got {offdiag.shape}"
            )
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        """Apply the operator to a dense vector."""
        vec = np.asarray(vec, dtype=np.complex128)
        out = self.diag * vec
        out[:-1] += self.offdiag * vec[1:]
        out[1:] += np.conj(self.offdiag) * vec[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        dense = np.diag(self.diag.astype(np.complex128))
        idx = np.arange(self.n_atoms)
        dense[idx, idx + 1] = self.offdiag
        dense[idx + 1, idx] = np.conj(self.offdiag)
        return dense


@dataclass(frozen=True)
class OperatorSet:
    """The collective spin operators for one atom number."""

    jx: CollectiveOperator
    jy: CollectiveOperator
    jz: CollectiveOperator
    jz2: CollectiveOperator

    def __iter__(self):
        return iter((self.jx, self.jy, self.jz, self.jz2))


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities over atom-number-difference outcomes n = 2*mu."""

    n_atoms: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_n_atoms(self.n_atoms)
        probs = _frozen_array(self.probs, np.float64)
        if probs.shape != (self.n_atoms + 1,):
            raise ConfigurationError(
                f"probs must have length N+1={self.n_atoms + 1}, got {probs.shape}"
            )
        if np.any(probs < 0.0):
            raise ConfigurationError("probabilities must be nonnegative")
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-9:
            raise ConfigurationError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", probs)

    @property
    def outcomes(self) -> np.ndarray:
        return 2.0 * mu_values(self.n_atoms)


def collective_operators(n_atoms: int) -> OperatorSet:
    """Build Jx, Jy, Jz, Jz^2 for ``n_atoms`` bosons (J = N/2).

    Matrix elements follow <mu+1|J+|mu> = sqrt(J(J+1) - mu(mu+1)) with
    Jx = (J+ + J-)/2 and Jy = (J+ - J-)/(2i).
    """
    n_atoms = _check_n_atoms(n_atoms)
    mu = mu_values(n_atoms)
    a = ladder_elements(n_atoms)
    zeros_off = np.zeros(n_atoms)
    # <i|Jy|i+1> = +i a_i / 2; the conjugate lives on the subdiagonal.
    return OperatorSet(
        jx=CollectiveOperator(n_atoms, np.zeros(n_atoms + 1), a / 2.0, "Jx"),
        jy=CollectiveOperator(n_atoms, np.zeros(n_atoms + 1), 0.5j * a, "Jy"),
        jz=CollectiveOperator(n_atoms, mu, zeros_off, "Jz"),
        jz2=CollectiveOperator(n_atoms, mu**2, zeros_off, "Jz2"),
    )


def _check_match(op: CollectiveOperator, psi: StateVector) -> None:
    if op.n_atoms != psi.n_atoms:
        raise ConfigurationError(
            f"operator is for N={op.n_atoms}, state for N={psi.n_atoms}"
        )


def expectation(op: CollectiveOperator, psi: StateVector) -> float:
    """Return <psi|op|psi> as a real number.

    The imaginary residue must vanish for Hermitian op; anything above
    1e-12 signals a construction bug and raises.
    """
    _check_match(op, psi)
    value = np.vdot(psi.amplitudes, op.matvec(psi.amplitudes))
    if abs(value.imag) > 1e-12:
        raise NumericalFailure(
            f"expectation has imaginary residue {value.imag!r}"
        )
    return float(value.real)


def variance(op: CollectiveOperator, psi: StateVector) -> float:
    """Return <op^2> - <op>^2, clamped at zero for tiny negative residue."""
    _check_match(op, psi)
    op_psi = op.matvec(psi.amplitudes)
    # <op^2> = |op psi|^2 since op is Hermitian.
    second = float(np.real(np.vdot(op_psi, op_psi)))
    first = float(np.real(np.vdot(psi.amplitudes, op_psi)))
    var = second - first * first
    if var < 0.0:
        if var < -1e-12:
            raise ConfigurationError(f"variance came out negative: {var!r}")
        var = 0.0
    return var


def outcome_distribution(psi: StateVector) -> OutcomeDistribution:
    """Born-rule probabilities P(n) = |<n|psi>|^2 over n = 2*mu."""
    return OutcomeDistribution(psi.n_atoms, np.abs(psi.amplitudes) ** 2)


def _log_binomial_half(n_atoms: int) -> np.ndarray:
    """0.5 * log C(N, i) for i = 0..N, computed in log space."""
    from scipy.special import gammaln

    i = np.arange(n_atoms + 1, dtype=float)
    return 0.5 * (
        gammaln(n_atoms + 1.0) - gammaln(i + 1.0) - gammaln(n_atoms - i + 1.0)
    )


def coherent_amplitudes(n_atoms: int, polar: float, azimuth: float) -> np.ndarray:
    """Amplitudes of the spin-coherent state |polar, azimuth> in the Jz basis.

    <J, mu | polar, azimuth> = sqrt(C(N, J+mu)) cos(polar/2)^(J+mu)
                               sin(polar/2)^(J-mu) exp(-i mu azimuth)

    Binomial coefficients are accumulated in log space so the construction
    stays finite for N well beyond 1000.
    """
    n_atoms = _check_n_atoms(n_atoms)
    mu = mu_values(n_atoms)
    j = n_atoms / 2.0
    c, s = np.cos(polar / 2.0), np.sin(polar / 2.0)
    with np.errstate(divide="ignore"):
        log_c = np.log(np.abs(c)) if abs(c) > 0 else -np.inf
        log_s = np.log(np.abs(s)) if abs(s) > 0 else -np.inf
    log_mag = _log_binomial_half(n_atoms).copy()
    # masked adds: a zero exponent must contribute 0 even when log_c/log_s
    # is -inf at a pole, and 0 * -inf is nan
    up = j + mu > 0
    dn = j - mu > 0
    log_mag[up] += (j + mu)[up] * log_c
    log_mag[dn] += (j - mu)[dn] * log_s
    # exact zeros at the poles
    if abs(c) == 0.0:
        log_mag[mu > -j] = -np.inf
    if abs(s) == 0.0:
        log_mag[mu < j] = -np.inf
    sign = np.where(c < 0, np.where((j + mu) % 2 == 1, -1.0, 1.0), 1.0)
    sign *= np.where(s < 0, np.where((j - mu) % 2 == 1, -1.0, 1.0), 1.0)
    amps = sign * np.exp(log_mag) * np.exp(-1j * mu * azimuth)
    amps /= np.linalg.norm(amps)
    return amps


def husimi_q(psi: StateVector, grid) -> np.ndarray:
    """Husimi projection Q(polar, azimuth) = |<polar, azimuth | psi>|^2.

    Parameters
    ----------
    psi : StateVector
    grid : sequence of (polar, azimuth) pairs, radians

    Returns
    -------
    ndarray of Q values in [0, 1], one per grid point.
    """
    pts = np.atleast_2d(np.asarray(grid, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ConfigurationError("grid must be a sequence of (polar, azimuth) pairs")
    if not np.all(np.isfinite(pts)):
        raise ConfigurationError("grid angles must be finite")
    out = np.empty(pts.shape[0])
    for k, (polar, azimuth) in enumerate(pts):
        coh = coherent_amplitudes(psi.n_atoms, polar, azimuth)
        out[k] = abs(np.vdot(coh, psi.amplitudes)) ** 2
    return out
