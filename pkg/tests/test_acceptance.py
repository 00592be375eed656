"""Acceptance suite: one printed PASS/FAIL line per criterion.

The full canonical run (``canonical_run``) takes about a minute and is shared by
criteria 4-7, 10 and 12.
"""

import math

import numpy as np
import pytest

from conftest import CANONICAL, CANONICAL_CONFIG
from reservoir_transport import (
    ChannelSpec,
    QuantumStatistics,
    SamplingPolicy,
    TransportModel,
    TrapSpec,
    initial_state,
    integrate,
    occupation,
    population,
    solve_equilibrium,
)
from reservoir_transport.analysis import fit_power_law, short_time_exponent, tau_eq_estimate
from reservoir_transport.cli import sweep_configs, sweep_point
from reservoir_transport.config import parse_config
from reservoir_transport.fock import certify_closure
from reservoir_transport.lattice import relaxation_time
from reservoir_transport.scenario import spectral_relaxation_time

FERMI = QuantumStatistics.FERMI
BOSE = QuantumStatistics.BOSE
TRAP = TrapSpec(CANONICAL["beta"], *CANONICAL["omegas"])


@pytest.fixture
def verdict(capsys):
    """Print one line per criterion, visible even under output capture."""

    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
        assert passed, detail

    return emit


def test_criterion_01_occupation_anchors(verdict):
    n_L = occupation(2.0, 1.401, 1.0, FERMI)
    n_R = occupation(2.0, 0.907, 1.0, FERMI)
    n_inf = occupation(2.0, 1.174, 1.0, FERMI)
    ok = abs(n_L - 0.355) <= 1e-3 and abs(n_R - 0.251) <= 1e-3 and abs(n_inf - 0.305) <= 1e-3
    verdict(1, ok, f"n_L={n_L:.6f} n_R={n_R:.6f} n_inf={n_inf:.6f} (targets 0.355/0.251/0.305 +-0.001)")


def test_criterion_02_relaxation_time(verdict):
    cfg = parse_config(CANONICAL_CONFIG)
    tau = spectral_relaxation_time(cfg.model)
    verdict(2, abs(tau / 27.833 - 1) < 0.005, f"tau_rel={tau:.5f} (target 27.833 +-0.5%)")


def test_criterion_03_equilibration_estimate(verdict):
    dn0 = occupation(2.0, 1.401, 1.0, FERMI) - occupation(2.0, 0.907, 1.0, FERMI)
    tau = tau_eq_estimate(500.0, dn0, 0.5, 1.0)
    verdict(3, abs(tau / 1.0265e4 - 1) < 0.005, f"tau_eq={tau:.2f} (target 1.0265e4 +-0.5%)")


@pytest.mark.slow
def test_criterion_04_decay_rates(canonical_run, verdict):
    _, _, s = canonical_run
    r1 = s.tau_eq_formula / s.tau_eq_fitted  # fitted rate over 1/tau_eq
    r2 = s.tau_eq_formula / s.tau_eq_bar_fitted  # fitted rate over 2/tau_eq
    ok = abs(r1 - 1) < 0.03 and abs(r2 - 1) < 0.05
    verdict(4, ok, f"dn rate ratio={r1:.5f} (+-3%), nbar rate ratio={r2:.5f} (+-5%), "
                   f"tau_eq={s.tau_eq_formula:.1f}")


@pytest.mark.slow
def test_criterion_05_metastability(canonical_run, verdict):
    _, _, s = canonical_run
    c = s.report.by_name()
    names = ("bond_homogeneity", "current_formula", "ladder_offsets", "ladder_interior")
    ok = all(c[k].value < 0.01 for k in names)
    verdict(5, ok, " ".join(f"{k}={c[k].value:.3g}" for k in names) + " (each < 1%)")


@pytest.mark.slow
def test_criterion_06_current_consistency(canonical_run, verdict):
    _, _, s = canonical_run
    c = s.report.by_name()
    ok = c["current_match"].value < 0.01 and c["ohmic"].passed is True and c["ohmic"].value < 0.02
    verdict(6, ok, f"|I-j|/|j|={c['current_match'].value:.3g} (<1%), "
                   f"ohmic={c['ohmic'].value:.3g} (<2%)")


def _sweep(text, values):
    rows = [sweep_point(c) for c in sweep_configs(parse_config(text), "mu_mid", values)]
    n = np.array([r["n_inf"] for r in rows])
    G = np.array([r["G_measured"] for r in rows])
    return rows, n, G


@pytest.mark.slow
def test_criterion_07_conductance(canonical_run, verdict):
    _, _, s = canonical_run
    dev = abs(s.G_measured / s.G_formula - 1)
    prefill = "lattice_init = uniform\nn0 = auto\nt_end = 1500\n"
    rows, n_f, G_f = _sweep(CANONICAL_CONFIG + prefill, np.linspace(0.0, 4.0, 9))
    bound = rows[0]["G_fermi_bound"]
    below = bool(np.all(G_f <= bound * 1.02))
    peak = n_f[int(np.argmax(G_f))]
    bose = CANONICAL_CONFIG.replace("stats = fermi", "stats = bose").replace("M = 7", "M = 5")
    bose = bose.replace("mu_L0 = 1.401", "mu_L0 = -0.5").replace("mu_R0 = 0.907", "mu_R0 = -0.6")
    _, n_b, G_b = _sweep(bose + "lattice_init = uniform\nn0 = auto\nt_end = 600\n",
                         [-2.0, -1.5, -1.0, -0.6, -0.3])
    order = np.argsort(n_b)
    bose_up = bool(np.all(np.diff(G_b[order]) > 0))
    ok = dev < 0.02 and below and abs(peak - 0.5) < 0.05 and bose_up
    verdict(7, ok, f"G dev={dev:.3g} (<2%), fermi max G/bound={G_f.max() / bound:.4f} (<=1.02), "
                   f"fermi peak at n_inf={peak:.3f}, bose monotone={bose_up}")


def test_criterion_08_short_time_law(verdict):
    worst = 0.0
    parts = []
    for M in (5, 7):
        model = TransportModel(ChannelSpec(M, 2.0), TRAP, 0.5, 0.5, FERMI)
        traj = integrate(initial_state(model, 1.401, 0.907), model, 5e-2, reltol=1e-10, abstol=1e-40,
                         sampling=SamplingPolicy("log", n_log=200, t_min=1e-3))
        c = math.ceil(M / 2)
        for j, k in [(1, 1), (1, 2), (1, M), (c, c)]:
            p = fit_power_law(traj.t, np.abs(traj.sigma[:, j - 1, k - 1]), (1e-3, 5e-2))
            err = abs(p - short_time_exponent(M, j, k))
            worst = max(worst, err)
            parts.append(f"M{M}({j},{k})={p:.3f}")
    verdict(8, worst <= 0.05, " ".join(parts) + f" max err={worst:.3g} (<=0.05)")


@pytest.mark.slow
def test_criterion_09_oracle_equivalence(verdict):
    f2 = certify_closure(TransportModel(ChannelSpec(2, 2.0), TRAP, 0.5, 0.5, FERMI), 1.401, 0.907)
    f3 = certify_closure(TransportModel(ChannelSpec(3, 2.0), TRAP, 0.5, 0.5, FERMI), 1.401, 0.907)
    b2 = certify_closure(TransportModel(ChannelSpec(2, 2.0), TRAP, 0.5, 0.5, BOSE), -0.5, -1.0, n_max=8)
    ok = f2.sigma_deviation < 1e-6 and f3.sigma_deviation < 1e-6 and b2.sigma_deviation < 1e-5
    verdict(9, ok, f"fermi M=2 {f2.sigma_deviation:.2g}, M=3 {f3.sigma_deviation:.2g} (<1e-6); "
                   f"bose M=2 {b2.sigma_deviation:.2g} (<1e-5), cutoff change {b2.cutoff_change:.2g}")


@pytest.mark.slow
def test_criterion_10_conservation(canonical_run, verdict):
    _, traj, s = canonical_run
    ok = s.conservation_drift < 1e-8 and s.spectrum_violation < 1e-8
    verdict(10, ok, f"drift={s.conservation_drift:.2g} (<1e-8), spectrum violation="
                    f"{s.spectrum_violation:.2g} (<1e-8) over {len(traj.t)} samples")


def test_criterion_11_scaling_law(verdict):
    Ms = np.arange(10, 61, 5)
    taus = [relaxation_time(ChannelSpec(int(M), 2.0), 0.05) for M in Ms]
    slope = np.polyfit(np.log(Ms), np.log(taus), 1)[0]
    ch = ChannelSpec(7, 2.0)
    ratio = relaxation_time(ch, 0.005) / relaxation_time(ch, 0.01)
    ok = abs(slope - 3) <= 0.15 and abs(ratio / 2 - 1) <= 0.01
    verdict(11, ok, f"log-log slope={slope:.4f} (3+-0.15), tau(g/2)/tau(g)={ratio:.5f} (2+-1%)")


@pytest.mark.slow
def test_criterion_12_equilibrium(canonical_run, verdict):
    cfg, _, s = canonical_run
    N0 = population(1.401, cfg.trap, FERMI) + population(0.907, cfg.trap, FERMI)
    eq = solve_equilibrium(N0, cfg.channel, cfg.trap, FERMI)
    ok = abs(eq.mu_inf / 1.174 - 1) < 0.02 and s.n_endpoint_max_dev < 1e-4
    verdict(12, ok, f"mu_inf={eq.mu_inf:.5f} (1.174 +-2%), endpoint max|n-n_inf|="
                    f"{s.n_endpoint_max_dev:.2g} (<1e-4)")
