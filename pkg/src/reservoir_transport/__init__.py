"""Particle transport through a tight-binding channel between two finite,
equilibrating reservoirs."""

from .analysis import (
    conductance,
    consistency_report,
    fit_exponential,
    fit_power_law,
    metastable_current,
    metastable_profile,
    short_time_exponent,
    tau_eq_estimate,
)
from .config import Config, load_config, parse_config, render_config
from .dynamics import (
    SamplingPolicy,
    SystemState,
    Trajectory,
    TransportModel,
    initial_state,
    integrate,
    observables,
    rhs,
)
from .errors import (
    ConfigError,
    DomainError,
    FitError,
    IntegrationError,
    NumericError,
    SingularityError,
    TransportError,
)
from .lattice import ChannelSpec, RateSet, effective_hamiltonian, hamiltonian, rates, relaxation_time
from .reservoir import (
    QuantumStatistics,
    TrapSpec,
    density_of_states,
    mu_from_population,
    occupation,
    occupation_limit,
    occupation_variance,
    population,
    population_slope,
    solve_equilibrium,
)
from .scenario import Summary, run_scenario

__version__ = "0.1.0"
