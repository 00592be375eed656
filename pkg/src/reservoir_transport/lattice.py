"""Tight-binding channel: hopping matrix, reservoir-induced rates and the
non-Hermitian effective Hamiltonian governing coherent relaxation."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .reservoir import QuantumStatistics


@dataclass(frozen=True)
class ChannelSpec:
    """Uniform open chain of ``M`` sites with on-site energy ``eps_s`` and hopping ``J``."""

    M: int
    eps_s: float
    J: float = 1.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise DomainError(f"M must be an integer >= 2, got {self.M}")
        if not self.J > 0:
            raise DomainError(f"J must be positive, got {self.J}")


@dataclass(frozen=True)
class RateSet:
    """Gain (``plus``) and loss (``minus``) rates at the two boundary sites."""

    gamma_plus_L: float
    gamma_minus_L: float
    gamma_plus_R: float
    gamma_minus_R: float


def hamiltonian(channel: ChannelSpec) -> np.ndarray:
    """Single-particle hopping matrix ``h`` with ``H_S = sum_ij h_ij a_i^dag a_j``."""
    M = channel.M
    h = np.diag(np.full(M, float(channel.eps_s)))
    off = np.full(M - 1, -float(channel.J))
    h += np.diag(off, 1) + np.diag(off, -1)
    return h


def _side_rates(n, gamma, stats, side):
    if n < 0:
        raise DomainError(f"reservoir occupation n_{side} must be non-negative, got {n}")
    if stats is QuantumStatistics.FERMI and n > 1:
        raise DomainError(f"fermionic occupation n_{side} must not exceed 1, got {n}")
    if gamma < 0:
        raise DomainError(f"gamma_{side} must be non-negative, got {gamma}")
    return gamma * n, gamma * (1.0 + stats.sign * n)


def rates(n_L, n_R, gamma_L, gamma_R, stats: QuantumStatistics) -> RateSet:
    """Injection/extraction rates fixed by particle-number matching.

    ``gamma_plus = gamma * n`` and ``gamma_minus = gamma * (1 + s n)`` where
    ``n`` is the reservoir occupation at the resonant energy.
    """
    gpl, gml = _side_rates(n_L, gamma_L, stats, "L")
    gpr, gmr = _side_rates(n_R, gamma_R, stats, "R")
    return RateSet(gpl, gml, gpr, gmr)


def effective_hamiltonian(channel: ChannelSpec, gamma_L, gamma_R) -> np.ndarray:
    """``h - (i/2)(gamma_L P_1 + gamma_R P_M)``.

    The damping does not depend on the reservoir occupations because
    ``gamma_minus - s*gamma_plus = gamma`` for either statistics.
    """
    heff = hamiltonian(channel).astype(complex)
    heff[0, 0] -= 0.5j * gamma_L
    heff[-1, -1] -= 0.5j * gamma_R
    return heff


def effective_spectrum(channel: ChannelSpec, gamma_L, gamma_R) -> np.ndarray:
    """Eigenvalues of `effective_hamiltonian`, sorted by real part."""
    try:
        ev = np.linalg.eigvals(effective_hamiltonian(channel, gamma_L, gamma_R))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    return ev[np.argsort(ev.real)]


def relaxation_time(channel: ChannelSpec, gamma) -> float:
    """Damping time of single-particle coherences, ``1 / (2 min_k |Im lambda_k|)``.

    Elements of the single-particle density matrix relax at pairwise sums of
    the single-particle decay rates, so the slowest one decays at twice the
    smallest ``|Im lambda_k|``.
    """
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    ev = effective_spectrum(channel, gamma, gamma)
    rate = 2.0 * np.min(np.abs(ev.imag))
    if not rate > 0:
        raise NumericError("effective spectrum has an undamped mode")
    return 1.0 / rate
