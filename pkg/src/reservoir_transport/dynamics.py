"""Coupled evolution of the channel's single-particle density matrix and the
two reservoir chemical potentials.

For a quadratic channel Hamiltonian with boundary gain/loss dissipators the
single-particle density matrix ``sigma_jk = <a_j^dag a_k>`` obeys the closed
equation::

    dsigma/dt = i[h, sigma] - 1/2 {W, sigma} + G_plus,   W = G_minus - s G_plus

with ``G_plus``, ``G_minus`` diagonal and nonzero only on the boundary sites.
The reservoirs follow ``dN_X/dt = gamma_X (n_boundary - n_X(eps_s))`` which is
integrated as an ODE for ``mu_X`` using the reservoir compressibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegrationError, SingularityError
from .lattice import ChannelSpec, rates
from .reservoir import (
    BOSE_MARGIN,
    QuantumStatistics,
    TrapSpec,
    occupation,
    population,
    population_slope,
)

#: below this compressibility the chemical-potential ODE is singular
MIN_SLOPE = 1e-300


@dataclass(frozen=True)
class TransportModel:
    """Everything that stays fixed during a run."""

    channel: ChannelSpec
    trap: TrapSpec
    gamma_L: float
    gamma_R: float
    stats: QuantumStatistics
    frozen_reservoirs: bool = False

    def __post_init__(self):
        if self.gamma_L < 0 or self.gamma_R < 0:
            raise DomainError("coupling rates gamma_L, gamma_R must be non-negative")

    @property
    def M(self) -> int:
        return self.channel.M


@dataclass
class SystemState:
    t: float
    sigma: np.ndarray
    mu_L: float
    mu_R: float

    def total_particles(self, model: TransportModel) -> float:
        trap, stats = model.trap, model.stats
        return (
            population(self.mu_L, trap, stats)
            + population(self.mu_R, trap, stats)
            + float(np.trace(self.sigma).real)
        )


class StateDerivative(NamedTuple):
    dsigma: np.ndarray
    dmu_L: float
    dmu_R: float


class ObservableRecord(NamedTuple):
    t: float
    n: np.ndarray
    j: np.ndarray
    mu_L: float
    mu_R: float
    N_L: float
    N_R: float
    I: float
    coh: float


def initial_state(model: TransportModel, mu_L, mu_R, n0=None, t0=0.0) -> SystemState:
    """Empty lattice by default; ``n0`` pre-fills every site uniformly."""
    M = model.M
    sigma = np.zeros((M, M), dtype=complex)
    if n0 is not None:
        if n0 < 0 or (model.stats is QuantumStatistics.FERMI and n0 > 1):
            raise DomainError(f"initial site occupation n0={n0} outside the allowed range")
        sigma += float(n0) * np.eye(M)
    state = SystemState(float(t0), sigma, float(mu_L), float(mu_R))
    _check_mu(state.mu_L, state.mu_R, model)
    return state


def _check_mu(mu_L, mu_R, model):
    if model.stats is QuantumStatistics.BOSE:
        limit = model.trap.E0 - BOSE_MARGIN
        for name, mu in (("mu_L", mu_L), ("mu_R", mu_R)):
            if not mu <= limit:
                raise DomainError(
                    f"Bose {name}={mu:.12g} must stay below E0 - {BOSE_MARGIN:g} = {limit:.12g}"
                )


def _reservoir_rate(n_boundary, mu, gamma, model):
    """Return (dN/dt, dmu/dt, resonant occupation)."""
    trap, stats = model.trap, model.stats
    n_res = occupation(model.channel.eps_s, mu, trap.beta, stats)
    dN = gamma * (n_boundary - n_res)
    if model.frozen_reservoirs:
        return dN, 0.0, n_res
    slope = population_slope(mu, trap, stats)
    if not slope > MIN_SLOPE:
        raise SingularityError(f"reservoir compressibility {slope:g} vanished at mu={mu:g}")
    return dN, dN / slope, n_res


def _sigma_rhs(sigma, J, w_L, w_R, g_L, g_R):
    # i[h, sigma] in O(M^2): the uniform on-site energy drops out of the commutator
    hs = np.zeros_like(sigma)
    hs[1:] += sigma[:-1]
    hs[:-1] += sigma[1:]
    sh = np.zeros_like(sigma)
    sh[:, 1:] += sigma[:, :-1]
    sh[:, :-1] += sigma[:, 1:]
    d = (-1j * J) * (hs - sh)
    # -1/2 {W, sigma}
    d[0, :] -= 0.5 * w_L * sigma[0, :]
    d[:, 0] -= 0.5 * w_L * sigma[:, 0]
    d[-1, :] -= 0.5 * w_R * sigma[-1, :]
    d[:, -1] -= 0.5 * w_R * sigma[:, -1]
    d[0, 0] += g_L
    d[-1, -1] += g_R
    return d


def rhs(state: SystemState, model: TransportModel) -> StateDerivative:
    """Time derivative of ``(sigma, mu_L, mu_R)``."""
    return _rhs(state.sigma, state.mu_L, state.mu_R, model)


def _rhs(sigma, mu_L, mu_R, model):
    _check_mu(mu_L, mu_R, model)
    ch, stats = model.channel, model.stats
    n1 = sigma[0, 0].real
    nM = sigma[-1, -1].real
    _, dmu_L, n_L = _reservoir_rate(n1, mu_L, model.gamma_L, model)
    _, dmu_R, n_R = _reservoir_rate(nM, mu_R, model.gamma_R, model)
    r = rates(n_L, n_R, model.gamma_L, model.gamma_R, stats)
    s = stats.sign
    w_L = r.gamma_minus_L - s * r.gamma_plus_L
    w_R = r.gamma_minus_R - s * r.gamma_plus_R
    dsigma = _sigma_rhs(sigma, ch.J, w_L, w_R, r.gamma_plus_L, r.gamma_plus_R)
    return StateDerivative(dsigma, dmu_L, dmu_R)


def observables(state: SystemState, model: TransportModel) -> ObservableRecord:
    """One-body observables of a state.

    Bond currents are ``j_{i,i+1} = 2 J Im sigma_{i,i+1}`` and the macroscopic
    current is ``I = -(dN_L/dt - dN_R/dt)/2`` from the reservoir rate equations.
    """
    sigma = state.sigma
    M = model.M
    trap, stats = model.trap, model.stats
    n = np.real(np.diag(sigma)).copy()
    j = 2.0 * model.channel.J * np.imag(np.diagonal(sigma, 1))
    eps = model.channel.eps_s
    dN_L = model.gamma_L * (n[0] - occupation(eps, state.mu_L, trap.beta, stats))
    dN_R = model.gamma_R * (n[-1] - occupation(eps, state.mu_R, trap.beta, stats))
    I = -0.5 * (dN_L - dN_R)
    if M > 2:
        mask = np.abs(np.subtract.outer(np.arange(M), np.arange(M))) > 1
        coh = float(np.max(np.abs(sigma[mask])))
    else:
        coh = 0.0
    return ObservableRecord(
        t=state.t,
        n=n,
        j=j,
        mu_L=state.mu_L,
        mu_R=state.mu_R,
        N_L=population(state.mu_L, trap, stats),
        N_R=population(state.mu_R, trap, stats),
        I=I,
        coh=coh,
    )


class HermitianPacker:
    """Maps a Hermitian ``M x M`` matrix plus two scalars onto ``M^2 + 2`` reals.

    Only the upper triangle is stored, so the unpacked matrix is Hermitian
    exactly, whatever the integrator does to the vector.
    """

    def __init__(self, M):
        self.M = M
        self.iu = np.triu_indices(M)
        self.iu1 = np.triu_indices(M, 1)
        self.nre = len(self.iu[0])
        self.nim = len(self.iu1[0])
        self.size = self.nre + self.nim + 2

    def pack(self, sigma, mu_L, mu_R):
        y = np.empty(self.size)
        y[: self.nre] = sigma[self.iu].real
        y[self.nre : self.nre + self.nim] = sigma[self.iu1].imag
        y[-2] = mu_L
        y[-1] = mu_R
        return y

    def unpack_sigma(self, y):
        M = self.M
        upper = np.zeros((M, M), dtype=complex)
        upper[self.iu] = y[: self.nre]
        upper[self.iu1] += 1j * y[self.nre : self.nre + self.nim]
        strict = np.triu(upper, 1)
        return upper + strict.conj().T

    def unpack(self, y):
        return self.unpack_sigma(y), float(y[-2]), float(y[-1])


@dataclass(frozen=True)
class SamplingPolicy:
    """Where trajectory samples are taken.

    ``auto``: log-spaced up to ``10 tau_rel`` then ``n`` uniform points;
    ``uniform``/``log``: ``n`` points; ``steps``: every accepted step.
    """

    kind: str = "auto"
    n: int = 2000
    n_log: int = 200
    t_min: float = 1e-3

    def __post_init__(self):
        if self.kind not in ("auto", "uniform", "log", "steps"):
            raise DomainError(f"unknown sampling policy {self.kind!r}")
        if self.n < 2:
            raise DomainError("sampling needs at least two points")

    @classmethod
    def parse(cls, text: str) -> "SamplingPolicy":
        kind, _, count = str(text).strip().partition(":")
        if count:
            try:
                n = int(count)
            except ValueError:
                raise DomainError(f"malformed sampling point count in {text!r}") from None
            return cls(kind, n)
        return cls(kind)

    def render(self) -> str:
        if self.kind == "steps" or (self.kind == "auto" and self.n == 2000):
            return self.kind
        return f"{self.kind}:{self.n}"

    def times(self, t0, t_end, tau_rel=None):
        span = t_end - t0
        if self.kind == "steps":
            return None
        if self.kind == "uniform":
            return np.linspace(t0, t_end, self.n)
        t_min = min(self.t_min, span / self.n)
        if self.kind == "log":
            return np.concatenate(([t0], t0 + np.geomspace(t_min, span, self.n - 1)))
        early_end = min(10.0 * tau_rel if tau_rel else 0.01 * span, span)
        early = t0 + np.geomspace(t_min, early_end, self.n_log)
        late = np.linspace(t0 + early_end, t_end, self.n)
        return np.unique(np.concatenate(([t0], early, late)))


@dataclass
class Trajectory:
    model: TransportModel
    t: np.ndarray
    sigma: np.ndarray
    mu_L: np.ndarray
    mu_R: np.ndarray
    nfev: int = 0
    _obs: dict | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.t)

    def state(self, i) -> SystemState:
        return SystemState(float(self.t[i]), self.sigma[i], float(self.mu_L[i]), float(self.mu_R[i]))

    @property
    def final_state(self) -> SystemState:
        return self.state(-1)

    def observables(self) -> dict:
        """Observable time series as a dict of arrays (cached)."""
        if self._obs is None:
            recs = [observables(self.state(i), self.model) for i in range(len(self))]
            self._obs = {
                "t": self.t,
                "n": np.array([r.n for r in recs]),
                "j": np.array([r.j for r in recs]).reshape(len(recs), self.model.M - 1),
                "mu_L": self.mu_L,
                "mu_R": self.mu_R,
                "N_L": np.array([r.N_L for r in recs]),
                "N_R": np.array([r.N_R for r in recs]),
                "I": np.array([r.I for r in recs]),
                "coh": np.array([r.coh for r in recs]),
            }
        return self._obs

    def total_particles(self) -> np.ndarray:
        obs = self.observables()
        return obs["N_L"] + obs["N_R"] + obs["n"].sum(axis=1)


def integrate(
    state0: SystemState,
    model: TransportModel,
    t_end,
    reltol=1e-8,
    abstol=1e-10,
    sampling: SamplingPolicy | None = None,
    tau_rel=None,
    max_step=np.inf,
) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) integration of the coupled system."""
    if not t_end > state0.t:
        raise DomainError(f"t_end={t_end} must exceed the initial time {state0.t}")
    for name, tol in (("reltol", reltol), ("abstol", abstol)):
        if not 0 < tol < 1:
            raise DomainError(f"{name} must lie in (0, 1), got {tol}")
    sampling = sampling or SamplingPolicy()
    if sampling.kind == "auto" and tau_rel is None and model.gamma_L > 0 and model.gamma_R > 0:
        from .lattice import relaxation_time

        tau_rel = relaxation_time(model.channel, 0.5 * (model.gamma_L + model.gamma_R))
    packer = HermitianPacker(model.M)
    y0 = packer.pack(state0.sigma, state0.mu_L, state0.mu_R)

    def f(t, y):
        sigma, mu_L, mu_R = packer.unpack(y)
        d = _rhs(sigma, mu_L, mu_R, model)
        return packer.pack(d.dsigma, d.dmu_L, d.dmu_R)

    t_eval = sampling.times(state0.t, float(t_end), tau_rel)
    sol = solve_ivp(
        f,
        (state0.t, float(t_end)),
        y0,
        method="RK45",
        t_eval=t_eval,
        rtol=reltol,
        atol=abstol,
        max_step=max_step,
    )
    if sol.status != 0:
        last = sol.y[:, -1] if sol.y.size else y0
        t_last = float(sol.t[-1]) if sol.t.size else state0.t
        sigma, mu_L, mu_R = packer.unpack(last)
        raise IntegrationError(
            f"integration stopped at t={t_last:.6g}: {sol.message}",
            state=SystemState(t_last, sigma, mu_L, mu_R),
        )
    ys = sol.y.T
    sig = np.array([packer.unpack_sigma(y) for y in ys])
    return Trajectory(
        model=model,
        t=sol.t.copy(),
        sigma=sig,
        mu_L=ys[:, -2].copy(),
        mu_R=ys[:, -1].copy(),
        nfev=int(sol.nfev),
    )


def conservation_drift(traj: Trajectory) -> float:
    """Maximum relative deviation of the total particle number from its initial value."""
    total = traj.total_particles()
    return float(np.max(np.abs(total - total[0])) / abs(total[0]))


def spectrum_bounds_violation(traj: Trajectory) -> float:
    """Largest excursion of sigma's eigenvalues outside [0, inf) or [0, 1]."""
    worst = 0.0
    fermi = traj.model.stats is QuantumStatistics.FERMI
    for s in traj.sigma:
        ev = np.linalg.eigvalsh(s)
        worst = max(worst, -ev[0])
        if fermi:
            worst = max(worst, ev[-1] - 1.0)
    return worst


__all__ = [
    "TransportModel",
    "SystemState",
    "StateDerivative",
    "ObservableRecord",
    "SamplingPolicy",
    "Trajectory",
    "HermitianPacker",
    "initial_state",
    "rhs",
    "observables",
    "integrate",
    "conservation_drift",
    "spectrum_bounds_violation",
]
