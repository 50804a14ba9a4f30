"""Input-state factories and the number-squeezing diagnostic.

The interferometer inputs studied here are all <Jz> = 0 states: the
binomial (coherent, all atoms in the symmetric superposition), the twin
Fock (equal split, no number fluctuations), and number-squeezed states
in between, parameterized by xi = dJz / (sqrt(N)/2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import BisectionError, ConfigurationError
from .spin import (
    StateVector,
    _check_n_atoms,
    _log_binomial_half,
    collective_operators,
    ladder_elements,
    variance,
)

__all__ = [
    "SqueezingFactor",
    "binomial_state",
    "twin_fock",
    "coupling_ground_state",
    "squeezed_ground_state",
    "number_squeezing",
]


@dataclass(frozen=True)
class SqueezingFactor:
    """Number squeezing xi = dJz / (sqrt(N)/2); 0 for twin Fock, 1 for binomial."""

    xi_n: float

    def __float__(self) -> float:
        return self.xi_n


def binomial_state(n_atoms: int) -> StateVector:
    """Spin-coherent state along +x: amplitudes sqrt(C(N, i) / 2^N).

    All amplitudes real positive; <Jx> = N/2, xi = 1.
    """
    n_atoms = _check_n_atoms(n_atoms)
    log_amp = _log_binomial_half(n_atoms) - 0.5 * n_atoms * np.log(2.0)
    amps = np.exp(log_amp)
    amps /= np.linalg.norm(amps)
    return StateVector(n_atoms, amps)


def twin_fock(n_atoms: int) -> StateVector:
    """Equal-split Fock state: all amplitude at mu = 0."""
    n_atoms = _check_n_atoms(n_atoms)
    amps = np.zeros(n_atoms + 1, dtype=np.complex128)
    amps[n_atoms // 2] = 1.0
    return StateVector(n_atoms, amps)


def coupling_ground_state(n_atoms: int, lam: float) -> StateVector:
    """Ground state of H(lam) = -lam*Jx + Jz^2.

    lam = 0 gives the twin Fock state; lam -> infinity approaches the
    binomial state.  Amplitudes are returned real, positive, and
    symmetric under mu -> -mu.
    """
    n_atoms = _check_n_atoms(n_atoms)
    if lam < 0:
        raise ConfigurationError(f"coupling must be >= 0, got {lam!r}")
    mu = np.arange(n_atoms + 1, dtype=float) - n_atoms / 2.0
    diag = mu**2
    offdiag = -0.5 * lam * ladder_elements(n_atoms)
    if lam == 0.0:
        return twin_fock(n_atoms)
    _, vec = eigh_tridiagonal(diag, offdiag, select="i", select_range=(0, 0))
    amps = vec[:, 0]
    # ground state of a tridiagonal with negative couplings is nodeless;
    # fix the overall sign so amplitudes are positive
    if amps.sum() < 0:
        amps = -amps
    amps = amps / np.linalg.norm(amps)
    return StateVector(n_atoms, amps)


def number_squeezing(psi: StateVector) -> SqueezingFactor:
    """xi = sqrt(Var Jz) / (sqrt(N)/2)."""
    jz = collective_operators(psi.n_atoms).jz
    return SqueezingFactor(
        float(np.sqrt(variance(jz, psi)) / (np.sqrt(psi.n_atoms) / 2.0))
    )


def squeezed_ground_state(
    n_atoms: int, xi_target: float, tol: float = 1e-3, max_iter: int = 200
) -> StateVector:
    """Number-squeezed input with xi matched to ``xi_target`` within ``tol``.

    Prepared as the ground state of -lam*Jx + Jz^2 with the coupling lam
    found by bisection; xi grows monotonically with lam.  The initial
    bracket is [0, 1e4*N], expanded geometrically if the target is not
    yet enclosed.
    """
    n_atoms = _check_n_atoms(n_atoms)
    if not (0.0 < xi_target < 1.0):
        raise ConfigurationError(
            f"xi_target must lie strictly inside (0, 1), got {xi_target!r}"
        )

    def xi_at(lam: float) -> float:
        return number_squeezing(coupling_ground_state(n_atoms, lam)).xi_n

    lo, hi = 0.0, 1e4 * n_atoms
    iterations = 0
    while xi_at(hi) < xi_target:
        lo, hi = hi, hi * 4.0
        iterations += 1
        if iterations >= max_iter:
            raise BisectionError(
                f"could not bracket xi={xi_target} with coupling up to {hi!r}"
            )
    while iterations < max_iter:
        mid = 0.5 * (lo + hi)
        xi_mid = xi_at(mid)
        if abs(xi_mid - xi_target) <= tol:
            return coupling_ground_state(n_atoms, mid)
        if xi_mid < xi_target:
            lo = mid
        else:
            hi = mid
        iterations += 1
    raise BisectionError(
        f"bisection did not converge to xi={xi_target} within {max_iter} "
        f"iterations; final bracket [{lo!r}, {hi!r}]"
    )
