"""End-to-end runs: build the initial state from a `Config`, integrate, and
condense the trajectory into a `Summary`."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import (
    ConsistencyReport,
    asymptotic_window,
    conductance,
    consistency_report,
    fit_exponential,
    tau_eq_estimate,
)
from .config import Config
from .dynamics import (
    Trajectory,
    conservation_drift,
    initial_state,
    integrate,
    spectrum_bounds_violation,
)
from .errors import FitError
from .lattice import effective_spectrum
from .reservoir import occupation, population, solve_equilibrium

#: tolerances for the run-level health checks
CONSERVATION_TOL = 1e-8
SPECTRUM_TOL = 1e-8


@dataclass
class Summary:
    tau_rel: float
    tau_eq_formula: float
    tau_eq_fitted: float
    tau_eq_bar_fitted: float
    N0: float
    mu_inf: float
    n_inf: float
    N_inf: float
    mu_inf_endpoint: float
    n_endpoint_max_dev: float
    G_formula: float
    G_measured: float
    G_fermi_bound: float
    conservation_drift: float
    spectrum_violation: float
    report: ConsistencyReport

    @property
    def checks_passed(self) -> bool:
        return (
            self.report.passed
            and self.conservation_drift < CONSERVATION_TOL
            and self.spectrum_violation < SPECTRUM_TOL
        )

    def as_items(self) -> list[tuple[str, object]]:
        items = [
            ("tau_rel", self.tau_rel),
            ("tau_eq_formula", self.tau_eq_formula),
            ("tau_eq_fitted", self.tau_eq_fitted),
            ("tau_eq_bar_fitted", self.tau_eq_bar_fitted),
            ("N0", self.N0),
            ("mu_inf", self.mu_inf),
            ("n_inf", self.n_inf),
            ("N_inf", self.N_inf),
            ("mu_inf_endpoint", self.mu_inf_endpoint),
            ("n_endpoint_max_dev", self.n_endpoint_max_dev),
            ("G_formula", self.G_formula),
            ("G_measured", self.G_measured),
            ("G_fermi_bound", self.G_fermi_bound),
            ("conservation_drift", self.conservation_drift),
            ("spectrum_violation", self.spectrum_violation),
            ("checks_passed", self.checks_passed),
        ]
        for c in self.report.checks:
            items.append((f"consistency_{c.name}", c.passed is not False))
            items.append((f"consistency_{c.name}_value", c.value))
        return items


def spectral_relaxation_time(model) -> float:
    ev = effective_spectrum(model.channel, model.gamma_L, model.gamma_R)
    return 1.0 / (2.0 * float(np.min(np.abs(ev.imag))))


def planned_times(cfg: Config):
    """Return ``(tau_rel, tau_eq_formula, t_end)`` for a configuration."""
    model = cfg.model
    tau_rel = spectral_relaxation_time(model)
    mu_L, mu_R = cfg.initial_mus()
    trap, stats = model.trap, model.stats
    dn0 = occupation(cfg.eps_s, mu_L, trap.beta, stats) - occupation(cfg.eps_s, mu_R, trap.beta, stats)
    dN0 = population(mu_L, trap, stats) - population(mu_R, trap, stats)
    gamma = 0.5 * (model.gamma_L + model.gamma_R)
    tau_eq = math.inf if dn0 == 0 else tau_eq_estimate(dN0, dn0, gamma, cfg.J)
    if cfg.t_end != "auto":
        t_end = float(cfg.t_end)
    elif math.isfinite(tau_eq):
        t_end = 5.0 * tau_eq
    else:
        t_end = 20.0 * tau_rel
    return tau_rel, tau_eq, t_end


def run_scenario(cfg: Config) -> tuple[Trajectory, Summary]:
    model = cfg.model
    trap, stats, ch = model.trap, model.stats, model.channel
    tau_rel, tau_eq, t_end = planned_times(cfg)
    mu_L, mu_R = cfg.initial_mus()
    state0 = initial_state(model, mu_L, mu_R, n0=cfg.initial_n0(mu_L, mu_R))
    traj = integrate(state0, model, t_end, reltol=cfg.reltol, abstol=cfg.abstol,
                     sampling=cfg.sampling_policy, tau_rel=tau_rel)

    N0 = state0.total_particles(model)
    eq = solve_equilibrium(N0, ch, trap, stats)
    gamma = 0.5 * (model.gamma_L + model.gamma_R)
    G_formula, G_bound = conductance(eq.n_inf, trap.beta, gamma, ch.J, stats)
    report = consistency_report(traj, tau_rel, tau_eq, eq.n_inf)

    obs = traj.observables()
    t = traj.t
    n_L = occupation(ch.eps_s, traj.mu_L, trap.beta, stats)
    n_R = occupation(ch.eps_s, traj.mu_R, trap.beta, stats)
    tau_fit = tau_bar_fit = math.nan
    if math.isfinite(tau_eq) and t[-1] >= asymptotic_window(tau_eq)[1]:
        window = asymptotic_window(tau_eq)
        try:
            tau_fit = 1.0 / fit_exponential(t, n_L - n_R, 0.0, window).rate
            tau_bar_fit = 2.0 / fit_exponential(t, 0.5 * (n_L + n_R), eq.n_inf, window).rate
        except FitError:
            pass

    summary = Summary(
        tau_rel=tau_rel,
        tau_eq_formula=tau_eq,
        tau_eq_fitted=tau_fit,
        tau_eq_bar_fitted=tau_bar_fit,
        N0=N0,
        mu_inf=eq.mu_inf,
        n_inf=eq.n_inf,
        N_inf=eq.N_inf,
        mu_inf_endpoint=0.5 * float(traj.mu_L[-1] + traj.mu_R[-1]),
        n_endpoint_max_dev=float(np.max(np.abs(obs["n"][-1] - eq.n_inf))),
        G_formula=G_formula,
        G_measured=report.G_measured,
        G_fermi_bound=G_bound,
        conservation_drift=conservation_drift(traj),
        spectrum_violation=spectrum_bounds_violation(traj),
        report=report,
    )
    return traj, summary
