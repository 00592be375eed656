import pytest

from reservoir_transport import ChannelSpec, QuantumStatistics, TransportModel, TrapSpec

FERMI = QuantumStatistics.FERMI
BOSE = QuantumStatistics.BOSE

# canonical regression scenario
CANONICAL = dict(M=7, eps_s=2.0, J=1.0, gamma=0.5, beta=1.0, omegas=(0.2, 0.2, 0.05),
            mu_L0=1.401, mu_R0=0.907)

CANONICAL_CONFIG = """\
stats = fermi
M = 7
eps_s = 2.0
J = 1.0
gamma_L = 0.5
beta = 1.0
omega_x = 0.2
omega_y = 0.2
omega_z = 0.05
mu_L0 = 1.401
mu_R0 = 0.907
"""


@pytest.fixture
def trap():
    return TrapSpec(1.0, 0.2, 0.2, 0.05)


@pytest.fixture
def channel():
    return ChannelSpec(7, 2.0, 1.0)


@pytest.fixture
def fermi_model(channel, trap):
    return TransportModel(channel, trap, 0.5, 0.5, FERMI)


@pytest.fixture(scope="session")
def canonical_run():
    """Full canonical run to 5 tau_eq (about a minute); shared across modules."""
    from reservoir_transport.config import parse_config
    from reservoir_transport.scenario import run_scenario

    cfg = parse_config(CANONICAL_CONFIG)
    traj, summary = run_scenario(cfg)
    return cfg, traj, summary
