"""Brute-force many-body reference: the full Lindblad equation on a truncated
Fock space, coupled to the same reservoir rate equations.

Only meant for tiny channels; it certifies the closed single-particle
equation used by `reservoir_transport.dynamics`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import (
    HermitianPacker,
    SamplingPolicy,
    TransportModel,
    _check_mu,
    _reservoir_rate,
    initial_state,
    integrate,
)
from .errors import DomainError, IntegrationError
from .lattice import hamiltonian, rates
from .reservoir import QuantumStatistics

MAX_FERMI_SITES = 10
MAX_DIM = 10_000


@dataclass(frozen=True)
class LadderAlgebra:
    M: int
    stats: QuantumStatistics
    n_max: int | None
    dim: int
    a: tuple  # annihilation operators, dense (dim, dim)

    @property
    def number_ops(self):
        return tuple(op.conj().T @ op for op in self.a)


def build_algebra(M, stats: QuantumStatistics, n_max=None) -> LadderAlgebra:
    """Ladder operators on ``M`` modes (Jordan-Wigner strings for fermions)."""
    if M < 1:
        raise DomainError(f"need at least one mode, got M={M}")
    if stats is QuantumStatistics.FERMI:
        if M > MAX_FERMI_SITES:
            raise DomainError(f"fermionic oracle limited to M <= {MAX_FERMI_SITES}, got {M}")
        lower = np.array([[0.0, 1.0], [0.0, 0.0]])
        z = np.diag([1.0, -1.0])
        eye = np.eye(2)
        ops = []
        for i in range(M):
            factors = [z] * i + [lower] + [eye] * (M - i - 1)
            ops.append(reduce(np.kron, factors))
        return LadderAlgebra(M, stats, None, 2**M, tuple(ops))
    if n_max is None or n_max < 1:
        raise DomainError("bosonic oracle needs a cutoff n_max >= 1")
    local = n_max + 1
    dim = local**M
    if dim > MAX_DIM:
        raise DomainError(f"Hilbert dimension {dim} exceeds the cap {MAX_DIM}")
    b = np.diag(np.sqrt(np.arange(1.0, local)), 1)
    eye = np.eye(local)
    ops = []
    for i in range(M):
        factors = [eye] * i + [b] + [eye] * (M - i - 1)
        ops.append(reduce(np.kron, factors))
    return LadderAlgebra(M, stats, n_max, dim, tuple(ops))


def many_body_hamiltonian(algebra: LadderAlgebra, channel) -> np.ndarray:
    h = hamiltonian(channel)
    a = algebra.a
    H = np.zeros((algebra.dim, algebra.dim))
    for i in range(algebra.M):
        for j in range(algebra.M):
            if h[i, j] != 0.0:
                H += h[i, j] * (a[i].T @ a[j])
    return H


def spdm_of(rho, algebra: LadderAlgebra) -> np.ndarray:
    """``sigma_jk = Tr(a_j^dag a_k rho)``."""
    M = algebra.M
    sigma = np.empty((M, M), dtype=complex)
    for j in range(M):
        for k in range(M):
            sigma[j, k] = np.trace(algebra.a[j].conj().T @ algebra.a[k] @ rho)
    return sigma


class _Generator:
    """Pieces of the Lindblad generator that do not depend on the rates."""

    def __init__(self, algebra, channel):
        self.H = many_body_hamiltonian(algebra, channel).astype(complex)
        a1, aM = algebra.a[0], algebra.a[-1]
        # jump operators in the order gain_L, loss_L, gain_R, loss_R
        self.jumps = (a1.conj().T, a1, aM.conj().T, aM)
        self.jdag_j = tuple(A.conj().T @ A for A in self.jumps)

    def __call__(self, rho, r):
        g = (r.gamma_plus_L, r.gamma_minus_L, r.gamma_plus_R, r.gamma_minus_R)
        K = sum(gk * AA for gk, AA in zip(g, self.jdag_j))
        heff = self.H - 0.5j * K
        out = -1j * (heff @ rho) + 1j * (rho @ heff.conj().T)
        for gk, A in zip(g, self.jumps):
            if gk != 0.0:
                out += gk * (A @ rho @ A.conj().T)
        return out


def lindblad_rhs(rho, algebra: LadderAlgebra, channel, rate_set) -> np.ndarray:
    """``-i[H, rho] + sum_k gamma_k D[A_k] rho`` with boundary gain/loss."""
    return _Generator(algebra, channel)(rho, rate_set)


class ManyBodyTrajectory(NamedTuple):
    t: np.ndarray
    rho: np.ndarray
    mu_L: np.ndarray
    mu_R: np.ndarray
    sigma: np.ndarray


def vacuum(algebra: LadderAlgebra) -> np.ndarray:
    rho = np.zeros((algebra.dim, algebra.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def evolve_coupled(
    model: TransportModel,
    algebra: LadderAlgebra,
    rho0,
    mu_L0,
    mu_R0,
    t_end,
    t_eval=None,
    reltol=1e-10,
    abstol=1e-12,
) -> ManyBodyTrajectory:
    """Integrate ``(rho, mu_L, mu_R)`` with rates rebuilt from the reservoirs."""
    if algebra.M != model.M or algebra.stats is not model.stats:
        raise DomainError("algebra does not match the transport model")
    _check_mu(mu_L0, mu_R0, model)
    gen = _Generator(algebra, model.channel)
    n1 = np.real(np.diag(algebra.number_ops[0]))
    nM = np.real(np.diag(algebra.number_ops[-1]))
    packer = HermitianPacker(algebra.dim)
    stats = model.stats

    def f(t, y):
        rho, mu_L, mu_R = packer.unpack(y)
        _check_mu(mu_L, mu_R, model)
        # number operators are diagonal in the occupation basis
        occ1 = float(np.real(np.diag(rho)) @ n1)
        occM = float(np.real(np.diag(rho)) @ nM)
        _, dmu_L, n_L = _reservoir_rate(occ1, mu_L, model.gamma_L, model)
        _, dmu_R, n_R = _reservoir_rate(occM, mu_R, model.gamma_R, model)
        r = rates(n_L, n_R, model.gamma_L, model.gamma_R, stats)
        return packer.pack(gen(rho, r), dmu_L, dmu_R)

    y0 = packer.pack(np.asarray(rho0, dtype=complex), mu_L0, mu_R0)
    sol = solve_ivp(f, (0.0, float(t_end)), y0, method="RK45", t_eval=t_eval,
                    rtol=reltol, atol=abstol)
    if sol.status != 0:
        raise IntegrationError(f"many-body integration failed: {sol.message}")
    rhos = np.array([packer.unpack_sigma(y) for y in sol.y.T])
    sig = np.array([spdm_of(r, algebra) for r in rhos])
    return ManyBodyTrajectory(sol.t, rhos, sol.y[-2].copy(), sol.y[-1].copy(), sig)


class ClosureReport(NamedTuple):
    sigma_deviation: float
    mu_deviation: float
    min_rho_eigenvalue: float
    trace_deviation: float
    cutoff_change: float  # sigma change under cutoff refinement (bosons), else 0


def certify_closure(model: TransportModel, mu_L0, mu_R0, t_end=50.0, n_max=None,
                    n_samples=101, reltol=1e-10, abstol=1e-12, refine=2) -> ClosureReport:
    """Compare the many-body and single-particle engines from an empty lattice.

    For bosons the oracle is rerun with ``n_max + refine`` to measure the
    cutoff sensitivity.
    """
    times = np.linspace(0.0, float(t_end), n_samples)
    algebra = build_algebra(model.M, model.stats, n_max)
    mb = evolve_coupled(model, algebra, vacuum(algebra), mu_L0, mu_R0, t_end,
                        t_eval=times, reltol=reltol, abstol=abstol)
    state0 = initial_state(model, mu_L0, mu_R0)
    traj = integrate(state0, model, t_end, reltol=reltol, abstol=abstol,
                     sampling=SamplingPolicy("uniform", n_samples))
    sig_dev = float(np.max(np.abs(mb.sigma - traj.sigma)))
    mu_dev = float(max(np.max(np.abs(mb.mu_L - traj.mu_L)), np.max(np.abs(mb.mu_R - traj.mu_R))))
    min_eig = float(min(np.linalg.eigvalsh(r)[0] for r in mb.rho))
    trace_dev = float(np.max(np.abs(np.trace(mb.rho, axis1=1, axis2=2) - 1.0)))
    cutoff = 0.0
    if model.stats is QuantumStatistics.BOSE and refine:
        finer = build_algebra(model.M, model.stats, n_max + refine)
        mb2 = evolve_coupled(model, finer, vacuum(finer), mu_L0, mu_R0, t_end,
                             t_eval=times, reltol=reltol, abstol=abstol)
        cutoff = float(np.max(np.abs(mb2.sigma - mb.sigma)))
    return ClosureReport(sig_dev, mu_dev, min_eig, trace_dev, cutoff)
