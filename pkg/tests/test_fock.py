import numpy as np
import pytest
from scipy.integrate import solve_ivp

import reservoir_transport.dynamics as dynamics
from reservoir_transport import ChannelSpec, QuantumStatistics, TransportModel, TrapSpec
from reservoir_transport.errors import DomainError
from reservoir_transport.fock import (
    MAX_DIM,
    build_algebra,
    certify_closure,
    lindblad_rhs,
    many_body_hamiltonian,
    spdm_of,
    vacuum,
)
from reservoir_transport.lattice import RateSet

FERMI = QuantumStatistics.FERMI
BOSE = QuantumStatistics.BOSE
TRAP = TrapSpec(1.0, 0.2, 0.2, 0.05)


def anticommutator(a, b):
    return a @ b + b @ a


@pytest.mark.parametrize("M", [2, 3])
def test_fermionic_algebra(M):
    alg = build_algebra(M, FERMI)
    eye = np.eye(alg.dim)
    for i, ai in enumerate(alg.a):
        for j, aj in enumerate(alg.a):
            np.testing.assert_allclose(anticommutator(ai, aj), 0, atol=1e-15)
            np.testing.assert_allclose(anticommutator(ai, aj.conj().T), eye * (i == j), atol=1e-15)


def test_bosonic_algebra():
    alg = build_algebra(2, BOSE, n_max=3)
    n0 = alg.number_ops[0]
    np.testing.assert_allclose(np.unique(np.round(np.linalg.eigvalsh(n0), 12)), [0, 1, 2, 3])
    a0, a1 = alg.a
    np.testing.assert_allclose(a0 @ a1 - a1 @ a0, 0, atol=1e-15)
    # canonical commutator holds below the cutoff
    comm = a0 @ a0.T - a0.T @ a0
    low = np.diag(n0) < 2.5
    np.testing.assert_allclose(np.diag(comm)[low], 1.0)


def test_dimension_caps():
    with pytest.raises(DomainError):
        build_algebra(11, FERMI)
    with pytest.raises(DomainError, match="cap"):
        build_algebra(5, BOSE, n_max=9)
    with pytest.raises(DomainError):
        build_algebra(2, BOSE)
    assert MAX_DIM == 10_000


def test_spdm_examples():
    alg = build_algebra(2, FERMI)
    vac = vacuum(alg)
    np.testing.assert_allclose(spdm_of(vac, alg), 0, atol=1e-15)
    psi = (alg.a[0].T + alg.a[1].T) @ np.linalg.eigh(vac)[1][:, -1] / np.sqrt(2)
    rho = np.outer(psi, psi.conj())
    np.testing.assert_allclose(spdm_of(rho, alg), 0.5 * np.ones((2, 2)), atol=1e-15)


def test_many_body_hamiltonian_single_particle_sector():
    ch = ChannelSpec(3, 2.0)
    alg = build_algebra(3, FERMI)
    H = many_body_hamiltonian(alg, ch)
    vac = np.linalg.eigh(vacuum(alg))[1][:, -1]
    states = np.array([a.T @ vac for a in alg.a]).T
    h1 = states.T @ H @ states
    np.testing.assert_allclose(h1, [[2, -1, 0], [-1, 2, -1], [0, -1, 2]], atol=1e-15)


@pytest.mark.parametrize("stats,n_max", [(FERMI, None), (BOSE, 3)])
def test_lindblad_rhs_is_traceless_and_hermitian(stats, n_max):
    rng = np.random.default_rng(4)
    alg = build_algebra(2, stats, n_max)
    x = rng.normal(size=(alg.dim, alg.dim)) + 1j * rng.normal(size=(alg.dim, alg.dim))
    rho = x @ x.conj().T
    rho /= np.trace(rho)
    r = RateSet(0.2, 0.3, 0.1, 0.4)
    d = lindblad_rhs(rho, alg, ChannelSpec(2, 2.0), r)
    assert abs(np.trace(d)) < 1e-13
    np.testing.assert_allclose(d, d.conj().T, atol=1e-14)


def test_pure_loss_decays_exponentially():
    # with loss on both sites the total number decays as exp(-gamma t)
    alg = build_algebra(2, FERMI)
    ch = ChannelSpec(2, 2.0)
    gamma = 0.3
    r = RateSet(0.0, gamma, 0.0, gamma)
    full = np.eye(alg.dim) * 0
    full[-1, -1] = 1.0  # both modes occupied
    assert np.trace(spdm_of(full, alg)).real == pytest.approx(2.0)
    shape = full.shape

    def f(t, y):
        return lindblad_rhs(y.reshape(shape), alg, ch, r).ravel()

    ts = np.linspace(0, 10, 11)
    sol = solve_ivp(f, (0, 10), full.ravel().astype(complex), t_eval=ts, rtol=1e-12, atol=1e-14)
    N = [np.trace(spdm_of(y.reshape(shape), alg)).real for y in sol.y.T]
    np.testing.assert_allclose(N, 2.0 * np.exp(-gamma * ts), atol=1e-10)


def test_thermal_product_state_is_stationary():
    alg = build_algebra(3, FERMI)
    n = 0.3
    rho = np.eye(alg.dim)
    for num in alg.number_ops:
        rho = rho @ (n * num + (1 - n) * (np.eye(alg.dim) - num))
    r = RateSet(0.5 * n, 0.5 * (1 - n), 0.5 * n, 0.5 * (1 - n))
    d = lindblad_rhs(rho.astype(complex), alg, ChannelSpec(3, 2.0), r)
    assert np.max(np.abs(d)) < 1e-15


@pytest.mark.parametrize("M", [2, 3])
def test_fermionic_closure(M):
    model = TransportModel(ChannelSpec(M, 2.0), TRAP, 0.5, 0.5, FERMI)
    rep = certify_closure(model, 1.401, 0.907, t_end=50.0)
    assert rep.sigma_deviation < 1e-6
    assert rep.mu_deviation < 1e-6
    assert rep.min_rho_eigenvalue > -1e-9
    assert rep.trace_deviation < 1e-9


def test_bosonic_closure():
    model = TransportModel(ChannelSpec(2, 2.0), TRAP, 0.5, 0.5, BOSE)
    rep = certify_closure(model, -0.5, -1.0, t_end=50.0, n_max=8)
    assert rep.sigma_deviation < 1e-5
    assert rep.cutoff_change < 1e-8
    assert rep.min_rho_eigenvalue > -1e-9


def test_closure_detects_wrong_dissipator_sign(monkeypatch):
    # mutant: fermionic boundary damping with the bosonic sign
    orig = dynamics._sigma_rhs

    def mutant(sigma, J, w_L, w_R, gp_L, gp_R):
        return orig(sigma, J, w_L - 2 * gp_L, w_R - 2 * gp_R, gp_L, gp_R)

    monkeypatch.setattr(dynamics, "_sigma_rhs", mutant)
    model = TransportModel(ChannelSpec(2, 2.0), TRAP, 0.5, 0.5, FERMI)
    rep = certify_closure(model, 1.401, 0.907, t_end=20.0, n_samples=21)
    assert rep.sigma_deviation > 1e-3
