"""Thermodynamics of a finite reservoir held in a 3D anisotropic harmonic trap.

The reservoir is a grand-canonical ideal gas at fixed inverse temperature
``beta``; only its chemical potential evolves.  Units: hbar = 1, energies in
units of the channel tunnelling ``J``.
"""

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize
from scipy.special import expit

from .errors import DomainError, NumericError
from .polylog import bose_einstein, fermi_dirac

#: chemical potentials closer than this to the trap ground state are rejected (Bose)
BOSE_MARGIN = 1e-6
#: absolute tolerance on chemical potentials returned by root finding
MU_XTOL = 1e-12


class QuantumStatistics(enum.Enum):
    """Particle statistics; ``sign`` is +1 for bosons and -1 for fermions."""

    BOSE = 1
    FERMI = -1

    @property
    def sign(self) -> int:
        return self.value

    @classmethod
    def parse(cls, text) -> "QuantumStatistics":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        if key in ("bose", "boson", "bosons"):
            return cls.BOSE
        if key in ("fermi", "fermion", "fermions"):
            return cls.FERMI
        raise DomainError(f"unknown statistics {text!r} (expected 'bose' or 'fermi')")

    def __str__(self):
        return self.name.lower()


@dataclass(frozen=True)
class TrapSpec:
    """Identical harmonic traps holding the left and right reservoirs.

    Frequencies are energies (hbar = 1).  ``E0`` is the zero-point energy.
    """

    beta: float
    omega_x: float
    omega_y: float
    omega_z: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        for name in ("omega_x", "omega_y", "omega_z"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def E0(self) -> float:
        return 0.5 * (self.omega_x + self.omega_y + self.omega_z)

    @property
    def omega_product(self) -> float:
        return self.omega_x * self.omega_y * self.omega_z


class Equilibrium(NamedTuple):
    mu_inf: float
    n_inf: float
    N_inf: float


def occupation(eps, mu, beta, stats: QuantumStatistics):
    """Mean occupation ``1/(exp(beta*(eps - mu)) - s)`` of a level at ``eps``.

    Works elementwise on arrays.  Raises `DomainError` for Bose levels at or
    below the chemical potential.
    """
    x = beta * (np.asarray(eps, dtype=float) - np.asarray(mu, dtype=float))
    if stats is QuantumStatistics.FERMI:
        out = expit(-x)
    else:
        if np.any(x <= 0):
            raise DomainError("Bose occupation diverges: requires eps > mu")
        out = 1.0 / np.expm1(x)
    return float(out) if np.ndim(out) == 0 else out


def occupation_variance(n, stats: QuantumStatistics):
    """Variance ``n(1 + s n)`` of a thermal mode with mean occupation ``n``."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise DomainError(f"occupation must be non-negative, got {n}")
    if stats is QuantumStatistics.FERMI and np.any(n > 1):
        raise DomainError(f"fermionic occupation must not exceed 1, got {n}")
    out = n * (1.0 + stats.sign * n)
    return float(out) if np.ndim(out) == 0 else out


def density_of_states(eps, trap: TrapSpec):
    """Semiclassical trap density of states ``(eps - E0)^2 / (2 wx wy wz)``."""
    e = np.asarray(eps, dtype=float) - trap.E0
    if np.any(e < 0):
        raise DomainError(f"density of states undefined below E0={trap.E0}")
    out = e * e / (2.0 * trap.omega_product)
    return float(out) if np.ndim(out) == 0 else out


def _check_bose_mu(mu, trap):
    if not mu <= trap.E0 - BOSE_MARGIN:
        raise DomainError(
            f"Bose chemical potential must satisfy mu < E0 - {BOSE_MARGIN:g} "
            f"(E0={trap.E0:.12g}), got mu={mu:.12g}"
        )


def _bose_capacity(trap):
    return population(trap.E0 - BOSE_MARGIN, trap, QuantumStatistics.BOSE)


def population(mu, trap: TrapSpec, stats: QuantumStatistics, method="polylog"):
    """Particle number ``N(mu) = int_{E0}^inf D(e) n(e, mu) de`` of one reservoir.

    ``method="polylog"`` uses the closed form in terms of Li_3; ``"quad"`` uses
    adaptive quadrature and serves as an independent check.
    """
    mu = float(mu)
    if stats is QuantumStatistics.BOSE:
        _check_bose_mu(mu, trap)
    b = trap.beta
    if method == "quad":
        return _population_quad(mu, trap, stats, slope=False)
    if method != "polylog":
        raise ValueError(f"unknown method {method!r}")
    eta = b * (mu - trap.E0)
    if stats is QuantumStatistics.FERMI:
        li = fermi_dirac(3, eta)
    else:
        li = bose_einstein(3, eta)
    return float(li / (b**3 * trap.omega_product))


def population_slope(mu, trap: TrapSpec, stats: QuantumStatistics, method="polylog"):
    """Reservoir compressibility ``dN/dmu`` (strictly positive)."""
    mu = float(mu)
    if stats is QuantumStatistics.BOSE:
        _check_bose_mu(mu, trap)
    b = trap.beta
    if method == "quad":
        return _population_quad(mu, trap, stats, slope=True)
    if method != "polylog":
        raise ValueError(f"unknown method {method!r}")
    eta = b * (mu - trap.E0)
    if stats is QuantumStatistics.FERMI:
        li = fermi_dirac(2, eta)
    else:
        li = bose_einstein(2, eta)
    return float(li / (b**2 * trap.omega_product))


def _population_quad(mu, trap, stats, slope):
    b = trap.beta
    s = stats.sign
    norm = 1.0 / (2.0 * trap.omega_product)

    # integrate in x = beta*(e - E0); eta = beta*(mu - E0)
    eta = b * (mu - trap.E0)

    def integrand(x):
        y = x - eta
        if stats is QuantumStatistics.FERMI:
            n = expit(-y)
        else:
            n = math.exp(-y) / -math.expm1(-y)
        weight = n * (1.0 + s * n) if slope else n
        return x * x * weight

    # split at the Fermi edge so the quadrature sees the step
    edge = max(eta, 0.0)
    upper = edge + 60.0
    pieces = [(0.0, edge), (edge, upper)] if edge > 0 else [(0.0, upper)]
    total = 0.0
    for lo, hi in pieces:
        val, err = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        if not np.isfinite(val):
            raise NumericError("population quadrature did not converge")
        total += val
    tail, _ = integrate.quad(integrand, upper, np.inf, epsabs=0.0, epsrel=1e-10, limit=200)
    total += tail
    if slope:
        return norm * total / b**2
    return norm * total / b**3


def _bracket_increasing(f, lo, hi, upper_limit=None, max_expand=200):
    """Expand ``[lo, hi]`` until ``f`` changes sign; ``f`` must be increasing."""
    flo = f(lo)
    for _ in range(max_expand):
        if flo <= 0:
            break
        width = hi - lo
        hi, lo = lo, lo - 2.0 * width
        flo = f(lo)
    else:
        raise DomainError("could not bracket root from below")
    fhi = f(hi)
    for _ in range(max_expand):
        if fhi >= 0:
            break
        width = hi - lo
        new_hi = hi + 2.0 * width
        if upper_limit is not None and new_hi >= upper_limit:
            new_hi = upper_limit
        lo, flo = hi, fhi
        hi = new_hi
        fhi = f(hi)
        if upper_limit is not None and hi == upper_limit and fhi < 0:
            raise DomainError("root lies beyond the admissible upper bound")
    else:
        raise DomainError("could not bracket root from above")
    return lo, hi


def mu_from_population(N, trap: TrapSpec, stats: QuantumStatistics) -> float:
    """Invert `population`: the chemical potential holding ``N`` particles."""
    N = float(N)
    if not N > 0:
        raise DomainError(f"particle number must be positive, got N={N}")
    upper = None
    if stats is QuantumStatistics.BOSE:
        capacity = _bose_capacity(trap)
        if N >= capacity:
            raise DomainError(
                f"N={N} exceeds the Bose capacity {capacity:.10g} reached at "
                f"mu = E0 - {BOSE_MARGIN:g} (no condensate modelling)"
            )
        upper = trap.E0 - BOSE_MARGIN
    b = trap.beta
    # Boltzmann guess, then degenerate (Fermi) guess
    guess = trap.E0 + math.log(N * b**3 * trap.omega_product) / b
    if stats is QuantumStatistics.FERMI:
        guess = max(guess, trap.E0 + (6.0 * N * trap.omega_product) ** (1.0 / 3.0) - 1.0 / b)
    if upper is not None:
        guess = min(guess, upper - 1.0 / b)

    def f(mu):
        return population(mu, trap, stats) / N - 1.0

    lo, hi = guess - 1.0 / b, guess + 1.0 / b
    if upper is not None:
        hi = min(hi, upper)
    lo, hi = _bracket_increasing(f, lo, hi, upper_limit=upper)
    return optimize.brentq(f, lo, hi, xtol=MU_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


def solve_equilibrium(N0, channel, trap: TrapSpec, stats: QuantumStatistics) -> Equilibrium:
    """Final common chemical potential from ``N0 = 2 N(mu) + M n(eps_s, mu)``.

    ``channel`` needs only ``M`` and ``eps_s`` attributes.
    """
    N0 = float(N0)
    if not N0 > 0:
        raise DomainError(f"total particle number must be positive, got N0={N0}")
    M, eps_s = channel.M, channel.eps_s
    upper = None
    if stats is QuantumStatistics.BOSE:
        upper = min(trap.E0, eps_s) - BOSE_MARGIN
        cap = 2.0 * population(upper, trap, stats) + M * occupation(eps_s, upper, trap.beta, stats)
        if N0 >= cap:
            raise DomainError(
                f"N0={N0} exceeds the Bose capacity {cap:.10g} of reservoirs plus channel"
            )

    def f(mu):
        total = 2.0 * population(mu, trap, stats) + M * occupation(eps_s, mu, trap.beta, stats)
        return total / N0 - 1.0

    try:
        guess = mu_from_population(0.5 * N0, trap, stats)
    except DomainError:
        guess = upper - 1.0 / trap.beta
    lo, hi = guess - 1.0 / trap.beta, guess + 1.0 / trap.beta
    if upper is not None:
        hi = min(hi, upper)
        lo = min(lo, hi - 1.0 / trap.beta)
    lo, hi = _bracket_increasing(f, lo, hi, upper_limit=upper)
    mu_inf = optimize.brentq(f, lo, hi, xtol=MU_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    return Equilibrium(
        mu_inf=mu_inf,
        n_inf=occupation(eps_s, mu_inf, trap.beta, stats),
        N_inf=population(mu_inf, trap, stats),
    )


def occupation_limit(channel, trap: TrapSpec, stats: QuantumStatistics) -> float:
    """Resonant occupation reached as the equilibrium ``mu`` approaches ``E0``.

    A lower bound on ``n_inf`` for fermions and an upper bound for bosons.
    """
    if not channel.eps_s > trap.E0:
        raise DomainError(f"eps_s={channel.eps_s} must exceed E0={trap.E0}")
    return occupation(channel.eps_s, trap.E0, trap.beta, stats)
