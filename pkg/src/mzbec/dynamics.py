"""Unitary evolution of the two-mode interferometer.

The full sequence is beam splitter, phase accumulation, beam splitter:

    U = exp(-i(H_t + H_i)T_t) exp(-i(H_e + H_i)T_e) exp(-i(H_t + H_i)T_t)

with H_t = -Omega*Jx, H_e = -dE*Jz, H_i = U0*Jz^2 and theta = dE*T_e.
All Hamiltonians are time independent within a leg, so propagation is
exact via eigendecomposition of the (gauge-reduced) real symmetric
tridiagonal matrix.  Eigensystems are cached per matrix so parameter
scans pay one O((N+1)^3) factorization and O((N+1)^2) per point after.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigurationError, NumericalFailure
from .spin import CollectiveOperator, StateVector, _check_n_atoms, collective_operators, mu_values

__all__ = [
    "SequenceParams",
    "Propagator",
    "build_hamiltonian",
    "propagate",
    "propagator",
    "phase_accumulate",
    "mz_sequence",
    "ideal_mz",
    "dpsi_dtheta",
]


@dataclass(frozen=True)
class SequenceParams:
    """All interferometer controls, dimensionless with hbar = 1.

    theta is owned jointly by (delta_e, t_phase): theta = delta_e * t_phase.
    The ``standard`` factory enforces omega * t_bs = pi/2; constructing
    directly is the explicit override path.
    """

    n_atoms: int
    omega: float
    u0: float
    delta_e: float
    t_bs: float
    t_phase: float

    def __post_init__(self):
        _check_n_atoms(self.n_atoms)
        if self.t_bs < 0 or self.t_phase < 0:
            raise ConfigurationError("durations must be >= 0")
        for name in ("omega", "u0", "delta_e", "t_bs", "t_phase"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")

    @property
    def theta(self) -> float:
        return self.delta_e * self.t_phase

    @property
    def u0n(self) -> float:
        return self.u0 * self.n_atoms

    @classmethod
    def standard(
        cls,
        n_atoms: int,
        u0n: float = 1.0,
        t_bs: float = 1.0,
        t_phase: float = 1.0,
        theta: float = 0.01,
        omega: float | None = None,
    ) -> "SequenceParams":
        """Paper-style controls: omega = pi/(2 t_bs), u0 = u0n/N, delta_e = theta/t_phase."""
        _check_n_atoms(n_atoms)
        if t_bs <= 0:
            raise ConfigurationError("standard() needs t_bs > 0 to fix omega*t_bs = pi/2")
        if omega is None:
            omega = math.pi / (2.0 * t_bs)
        if t_phase > 0:
            delta_e = theta / t_phase
        elif theta == 0.0:
            delta_e = 0.0
        else:
            raise ConfigurationError("t_phase = 0 is incompatible with theta != 0")
        return cls(
            n_atoms=n_atoms,
            omega=omega,
            u0=u0n / n_atoms,
            delta_e=delta_e,
            t_bs=t_bs,
            t_phase=t_phase,
        )

    def with_theta(self, theta: float) -> "SequenceParams":
        """Same controls, delta_e re-derived so theta = delta_e * t_phase."""
        if self.t_phase <= 0:
            raise ConfigurationError("cannot set theta with t_phase = 0")
        return replace(self, delta_e=theta / self.t_phase)

    def with_t_phase(self, t_phase: float) -> "SequenceParams":
        """Change the accumulation time at fixed theta (delta_e adjusted)."""
        if t_phase <= 0:
            raise ConfigurationError("t_phase must be > 0 here")
        return replace(self, t_phase=t_phase, delta_e=self.theta / t_phase)


def build_hamiltonian(
    n_atoms: int, omega: float, u0: float, delta_e: float
) -> CollectiveOperator:
    """H = -omega*Jx - delta_e*Jz + u0*Jz^2, real symmetric tridiagonal."""
    ops = collective_operators(n_atoms)
    mu = mu_values(n_atoms)
    diag = u0 * mu**2 - delta_e * mu
    offdiag = -omega * np.real(ops.jx.offdiag)
    return CollectiveOperator(n_atoms, diag, offdiag, label="H")


@lru_cache(maxsize=32)
def _eigensystem(n_atoms: int, diag_bytes: bytes, offdiag_bytes: bytes):
    diag = np.frombuffer(diag_bytes, dtype=np.float64).copy()
    offdiag = np.frombuffer(offdiag_bytes, dtype=np.float64).copy()
    try:
        w, v = eigh_tridiagonal(diag, offdiag)
    except Exception as exc:  # pragma: no cover - LAPACK failures are rare
        raise NumericalFailure(
            f"tridiagonal eigensolver failed for N={n_atoms}: {exc}"
        ) from exc
    w.flags.writeable = False
    v.flags.writeable = False
    return w, v


def _gauge(offdiag: np.ndarray):
    """Diagonal unitary d with conj(d_k) o_k d_{k+1} = |o_k| (real reduction)."""
    angles = np.angle(offdiag)
    cum = np.concatenate(([0.0], np.cumsum(angles)))
    return np.abs(offdiag), np.exp(-1j * cum)


def _apply_exp(op: CollectiveOperator, t: float, vec: np.ndarray) -> np.ndarray:
    """exp(-i op t) vec for a Hermitian tridiagonal op, via cached eigensystem."""
    rmag, d = _gauge(op.offdiag)
    w, v = _eigensystem(op.n_atoms, op.diag.tobytes(), rmag.tobytes())
    y = np.conj(d) * np.asarray(vec, dtype=np.complex128)
    y = v.T @ y
    y *= np.exp(-1j * w * t)
    return d * (v @ y)


def propagate(psi: StateVector, hamiltonian: CollectiveOperator, t: float) -> StateVector:
    """Evolve: psi' = exp(-i H t) psi, exactly, norm preserved."""
    if t < 0:
        raise ConfigurationError("propagation duration must be >= 0")
    if psi.n_atoms != hamiltonian.n_atoms:
        raise ConfigurationError("state and Hamiltonian dimension mismatch")
    amps = _apply_exp(hamiltonian, t, psi.amplitudes)
    return StateVector(psi.n_atoms, amps)


@dataclass(frozen=True)
class Propagator:
    """Dense unitary for one evolution leg, with its generator description."""

    n_atoms: int
    unitary: np.ndarray = field(repr=False)
    description: str = ""

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=np.complex128).copy()
        dim = self.n_atoms + 1
        if u.shape != (dim, dim):
            raise ConfigurationError(f"unitary must be {dim}x{dim}, got {u.shape}")
        dev = np.max(np.abs(u.conj().T @ u - np.eye(dim)))
        if dev > 1e-10:
            raise NumericalFailure(f"propagator not unitary: max deviation {dev!r}")
        u.flags.writeable = False
        object.__setattr__(self, "unitary", u)

    def apply(self, psi: StateVector) -> StateVector:
        return StateVector(psi.n_atoms, self.unitary @ psi.amplitudes)


def propagator(hamiltonian: CollectiveOperator, t: float, description: str = "") -> Propagator:
    """Dense exp(-i H t) built column by column from the cached eigensystem."""
    rmag, d = _gauge(hamiltonian.offdiag)
    w, v = _eigensystem(hamiltonian.n_atoms, hamiltonian.diag.tobytes(), rmag.tobytes())
    core = (v * np.exp(-1j * w * t)) @ v.T
    u = (d[:, None] * core) * np.conj(d)[None, :]
    return Propagator(hamiltonian.n_atoms, u, description)


def phase_accumulate(psi: StateVector, theta: float, u0: float, t_phase: float) -> StateVector:
    """Middle leg of the sequence: both generators are diagonal, so

    exp(-i(H_e + H_i)T_e) = exp(i theta Jz) exp(-i u0 T_e Jz^2)

    acts amplitude-wise as exp(i(theta mu - u0 T_e mu^2)).
    """
    mu = psi.mu
    phases = np.exp(1j * (theta * mu - u0 * t_phase * mu**2))
    return StateVector(psi.n_atoms, phases * psi.amplitudes)


def _bs_hamiltonian(params: SequenceParams) -> CollectiveOperator:
    # beam-splitter legs carry tunneling and interaction, no well tilt
    return build_hamiltonian(params.n_atoms, params.omega, params.u0, 0.0)


def mz_sequence(psi_in: StateVector, params: SequenceParams) -> StateVector:
    """Full interferometer: BS leg, phase accumulation, BS leg."""
    h_bs = _bs_hamiltonian(params)
    out = propagate(psi_in, h_bs, params.t_bs)
    out = phase_accumulate(out, params.theta, params.u0, params.t_phase)
    return propagate(out, h_bs, params.t_bs)


def ideal_mz(psi_in: StateVector, theta: float) -> StateVector:
    """Noninteracting reference map exp(-i theta Jy), any sign of theta."""
    jy = collective_operators(psi_in.n_atoms).jy
    return StateVector(psi_in.n_atoms, _apply_exp(jy, theta, psi_in.amplitudes))


def dpsi_dtheta(psi_in: StateVector, params: SequenceParams) -> np.ndarray:
    """Analytic d|psi_out>/d theta, unnormalized.

    Jz commutes with Jz^2, so differentiating the middle leg gives
    U_BS2 (i Jz) U_phase U_BS1 |psi_in>.
    """
    h_bs = _bs_hamiltonian(params)
    mid = propagate(psi_in, h_bs, params.t_bs)
    mid = phase_accumulate(mid, params.theta, params.u0, params.t_phase)
    deriv = 1j * mid.mu * mid.amplitudes
    return _apply_exp(h_bs, params.t_bs, deriv)
