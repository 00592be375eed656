"""Flat ``key = value`` run configuration.

One assignment per line, ``#`` starts a comment.  Recognised keys::

    stats      bose | fermi                         (required)
    M          number of lattice sites >= 2         (required)
    eps_s      on-site energy                       (required)
    J          tunnelling                           (default 1)
    gamma_L    left coupling                        (required)
    gamma_R    right coupling                       (default gamma_L)
    beta, omega_x, omega_y, omega_z                 (required)
    mu_L0, mu_R0 | N_L0, N_R0                       (exactly one pair)
    lattice_init  empty | uniform                   (default empty)
    n0         site occupation for uniform, or 'auto' = mean resonant occupation
    t_end      final time or 'auto' (5 tau_eq, or 20 tau_rel without bias)
    reltol, abstol                                  (defaults 1e-8, 1e-10)
    sampling   auto | uniform:N | log:N | steps     (default auto)
    out_csv, out_summary, out_svg                   output paths (optional)
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .dynamics import SamplingPolicy, TransportModel
from .errors import ConfigError, DomainError
from .lattice import ChannelSpec
from .reservoir import BOSE_MARGIN, QuantumStatistics, TrapSpec, mu_from_population, occupation

KEYS = (
    "stats", "M", "eps_s", "J", "gamma_L", "gamma_R", "beta", "omega_x", "omega_y",
    "omega_z", "mu_L0", "mu_R0", "N_L0", "N_R0", "lattice_init", "n0", "t_end",
    "reltol", "abstol", "sampling", "out_csv", "out_summary", "out_svg",
)
REQUIRED = ("stats", "M", "eps_s", "gamma_L", "beta", "omega_x", "omega_y", "omega_z")
_FLOATS = ("eps_s", "J", "gamma_L", "gamma_R", "beta", "omega_x", "omega_y", "omega_z",
           "mu_L0", "mu_R0", "N_L0", "N_R0", "reltol", "abstol")


@dataclass(frozen=True)
class Config:
    stats: QuantumStatistics
    M: int
    eps_s: float
    gamma_L: float
    beta: float
    omega_x: float
    omega_y: float
    omega_z: float
    J: float = 1.0
    gamma_R: float | None = None
    mu_L0: float | None = None
    mu_R0: float | None = None
    N_L0: float | None = None
    N_R0: float | None = None
    lattice_init: str = "empty"
    n0: float | str | None = None
    t_end: float | str = "auto"
    reltol: float = 1e-8
    abstol: float = 1e-10
    sampling: str = "auto"
    out_csv: str | None = None
    out_summary: str | None = None
    out_svg: str | None = None

    @property
    def channel(self) -> ChannelSpec:
        return ChannelSpec(self.M, self.eps_s, self.J)

    @property
    def trap(self) -> TrapSpec:
        return TrapSpec(self.beta, self.omega_x, self.omega_y, self.omega_z)

    @property
    def gamma_R_value(self) -> float:
        return self.gamma_L if self.gamma_R is None else self.gamma_R

    @property
    def model(self) -> TransportModel:
        return TransportModel(self.channel, self.trap, self.gamma_L, self.gamma_R_value, self.stats)

    @property
    def sampling_policy(self) -> SamplingPolicy:
        return SamplingPolicy.parse(self.sampling)

    def initial_mus(self) -> tuple[float, float]:
        if self.mu_L0 is not None:
            return self.mu_L0, self.mu_R0
        trap = self.trap
        return (mu_from_population(self.N_L0, trap, self.stats),
                mu_from_population(self.N_R0, trap, self.stats))

    def initial_n0(self, mu_L, mu_R) -> float | None:
        if self.lattice_init == "empty":
            return None
        if self.n0 == "auto":
            occ = occupation(self.eps_s, [mu_L, mu_R], self.beta, self.stats)
            return float(occ.mean())
        return float(self.n0)

    def replace(self, **changes) -> "Config":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return validate(Config(**data))


def _number(key, text, kind=float):
    try:
        if kind is int:
            value = float(text)
            if value != int(value):
                raise ValueError
            return int(value)
        return float(text)
    except ValueError:
        raise ConfigError(f"malformed number for key {key}: {text!r}") from None


def parse_config(text: str) -> Config:
    """Parse and validate a configuration document."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key: {key}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key: {key}")
        raw[key] = value
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing key: {key}")

    kw: dict = {}
    for key, value in raw.items():
        if key == "stats":
            try:
                kw[key] = QuantumStatistics.parse(value)
            except DomainError as exc:
                raise ConfigError(f"stats: {exc}") from None
        elif key == "M":
            kw[key] = _number(key, value, int)
        elif key in _FLOATS:
            kw[key] = _number(key, value)
        elif key == "t_end":
            kw[key] = "auto" if value == "auto" else _number(key, value)
        elif key == "n0":
            kw[key] = "auto" if value == "auto" else _number(key, value)
        else:
            kw[key] = value
    return validate(Config(**kw))


def validate(cfg: Config) -> Config:
    """Check every physical rule; raise `ConfigError` naming the key or rule."""
    try:
        cfg.channel
        cfg.trap
        cfg.sampling_policy
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    for key in ("gamma_L", "gamma_R"):
        v = getattr(cfg, key)
        if v is not None and v < 0:
            raise ConfigError(f"{key} must be non-negative, got {v}")
    has_mu = cfg.mu_L0 is not None or cfg.mu_R0 is not None
    has_N = cfg.N_L0 is not None or cfg.N_R0 is not None
    if has_mu == has_N:
        raise ConfigError("exactly one of the pairs (mu_L0, mu_R0) or (N_L0, N_R0) must be given")
    pair = ("mu_L0", "mu_R0") if has_mu else ("N_L0", "N_R0")
    for key in pair:
        if getattr(cfg, key) is None:
            raise ConfigError(f"missing key: {key}")
    if cfg.stats is QuantumStatistics.BOSE and has_mu:
        limit = cfg.trap.E0 - BOSE_MARGIN
        for key in pair:
            if not getattr(cfg, key) <= limit:
                raise ConfigError(
                    f"{key}: Bose chemical potential rule violated, need mu < E0 = {cfg.trap.E0:.12g} "
                    f"(margin {BOSE_MARGIN:g})"
                )
    if has_N:
        try:
            cfg.initial_mus()
        except DomainError as exc:
            raise ConfigError(f"N_L0/N_R0: {exc}") from None
    if cfg.lattice_init not in ("empty", "uniform"):
        raise ConfigError(f"lattice_init must be 'empty' or 'uniform', got {cfg.lattice_init!r}")
    if cfg.lattice_init == "uniform":
        if cfg.n0 is None:
            raise ConfigError("missing key: n0 (required when lattice_init = uniform)")
        if cfg.n0 != "auto":
            if cfg.n0 < 0 or (cfg.stats is QuantumStatistics.FERMI and cfg.n0 > 1):
                raise ConfigError(f"n0 outside the allowed occupation range: {cfg.n0}")
    elif cfg.n0 is not None:
        raise ConfigError("n0 given but lattice_init is empty")
    if cfg.t_end != "auto" and not cfg.t_end > 0:
        raise ConfigError(f"t_end must be positive, got {cfg.t_end}")
    for key in ("reltol", "abstol"):
        if not 0 < getattr(cfg, key) < 1:
            raise ConfigError(f"{key} must lie in (0, 1), got {getattr(cfg, key)}")
    return cfg


def render_config(cfg: Config) -> str:
    """Inverse of `parse_config` (only keys that are set are written)."""
    lines = []
    for key in KEYS:
        value = getattr(cfg, key)
        if value is None:
            continue
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def load_config(path) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
