"""Command-line interface.

    reservoir-transport run CONFIG
    reservoir-transport relax CONFIG
    reservoir-transport equilibrium CONFIG
    reservoir-transport sweep CONFIG --key KEY --grid LO:HI:NUM [--jobs N]
    reservoir-transport validate CONFIG [--t-end T] [--n-max N]

Exit codes: 0 success, 2 config error, 3 numeric/integration error,
4 failed internal check.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import Config, load_config
from .errors import ConfigError, TransportError
from .fock import certify_closure
from .lattice import effective_spectrum
from .output import format_value, render_summary, write_outputs
from .reservoir import QuantumStatistics, population, solve_equilibrium
from .scenario import planned_times, run_scenario, spectral_relaxation_time

log = logging.getLogger("reservoir_transport")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4

#: acceptance thresholds used by `validate`
CLOSURE_TOL = {QuantumStatistics.FERMI: 1e-6, QuantumStatistics.BOSE: 1e-5}
CUTOFF_TOL = 1e-8
MIN_EIGENVALUE = -1e-9
#: slack on the fermionic conductance bound in `sweep`
BOUND_SLACK = 0.02

SWEEP_COLUMNS = ("n_inf", "mu_inf", "N_inf", "G_formula", "G_measured", "G_fermi_bound",
                 "tau_rel", "tau_eq_formula", "checks_passed")


def _print_items(items, out=None):
    out = out or sys.stdout
    for k, v in items:
        out.write(f"{k}={format_value(v)}\n")


def cmd_run(cfg: Config, args) -> int:
    traj, summary = run_scenario(cfg)
    csv_path = args.out_csv or cfg.out_csv
    summary_path = args.out_summary or cfg.out_summary
    svg_path = args.out_svg or cfg.out_svg
    write_outputs(traj, summary, csv_path, summary_path, svg_path)
    sys.stdout.write(render_summary(summary))
    for c in summary.report.checks:
        log.info(c.line())
    return EXIT_OK if summary.checks_passed else EXIT_CHECK


def cmd_relax(cfg: Config, args) -> int:
    model = cfg.model
    ev = effective_spectrum(model.channel, model.gamma_L, model.gamma_R)
    items = [("tau_rel", spectral_relaxation_time(model))]
    items += [(f"lambda_{k}", f"{format_value(z.real)},{format_value(z.imag)}")
              for k, z in enumerate(ev, 1)]
    _print_items(items)
    return EXIT_OK


def cmd_equilibrium(cfg: Config, args) -> int:
    mu_L, mu_R = cfg.initial_mus()
    n0 = cfg.initial_n0(mu_L, mu_R) or 0.0
    N0 = population(mu_L, cfg.trap, cfg.stats) + population(mu_R, cfg.trap, cfg.stats) + cfg.M * n0
    eq = solve_equilibrium(N0, cfg.channel, cfg.trap, cfg.stats)
    _print_items([("N0", N0), ("mu_inf", eq.mu_inf), ("n_inf", eq.n_inf), ("N_inf", eq.N_inf)])
    return EXIT_OK


def _grid(args) -> list[float]:
    if args.values:
        try:
            return [float(v) for v in args.values.split(",")]
        except ValueError:
            raise ConfigError(f"malformed --values {args.values!r}") from None
    try:
        lo, hi, num = args.grid.split(":")
        return list(np.linspace(float(lo), float(hi), int(num)))
    except ValueError:
        raise ConfigError(f"malformed --grid {args.grid!r}, expected LO:HI:NUM") from None


def sweep_configs(cfg: Config, key: str, values) -> list[Config]:
    """One config per grid value.

    ``mu_mid`` shifts both initial chemical potentials, keeping their difference.
    """
    out = []
    for v in values:
        if key == "mu_mid":
            if cfg.mu_L0 is None:
                raise ConfigError("sweep key mu_mid needs a (mu_L0, mu_R0) config")
            half = 0.5 * (cfg.mu_L0 - cfg.mu_R0)
            out.append(cfg.replace(mu_L0=v + half, mu_R0=v - half))
        elif key == "M":
            out.append(cfg.replace(M=int(round(v))))
        elif key in ("stats", "lattice_init", "sampling", "out_csv", "out_summary", "out_svg"):
            raise ConfigError(f"sweep key must be numeric: {key}")
        elif key in Config.__dataclass_fields__:
            out.append(cfg.replace(**{key: float(v)}))
        else:
            raise ConfigError(f"unknown sweep key: {key}")
    return out


def sweep_point(cfg: Config) -> dict:
    _, summary = run_scenario(cfg)
    row = dict(summary.as_items())
    return {k: row[k] for k in SWEEP_COLUMNS}


def cmd_sweep(cfg: Config, args) -> int:
    values = _grid(args)
    configs = sweep_configs(cfg, args.key, values)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(sweep_point, configs))  # map keeps grid order
    else:
        rows = [sweep_point(c) for c in configs]
    lines = [",".join((args.key,) + SWEEP_COLUMNS)]
    ok = True
    for v, row in zip(values, rows):
        lines.append(",".join([format_value(v)] + [format_value(row[c]) for c in SWEEP_COLUMNS]))
        ok &= bool(row["checks_passed"])
        if cfg.stats is QuantumStatistics.FERMI and np.isfinite(row["G_measured"]):
            ok &= row["G_measured"] <= row["G_fermi_bound"] * (1.0 + BOUND_SLACK)
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_validate(cfg: Config, args) -> int:
    mu_L, mu_R = cfg.initial_mus()
    n_max = args.n_max if cfg.stats is QuantumStatistics.BOSE else None
    rep = certify_closure(cfg.model, mu_L, mu_R, t_end=args.t_end, n_max=n_max,
                          n_samples=args.samples)
    tol = CLOSURE_TOL[cfg.stats]
    ok = (rep.sigma_deviation < tol and rep.mu_deviation < tol
          and rep.min_rho_eigenvalue >= MIN_EIGENVALUE and rep.cutoff_change < CUTOFF_TOL)
    _print_items(list(rep._asdict().items()) + [("tolerance", tol), ("passed", ok)])
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "run": cmd_run,
    "relax": cmd_relax,
    "equilibrium": cmd_equilibrium,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reservoir-transport",
                                description="Transport through a lattice between finite reservoirs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="integrate a scenario and write CSV/summary")
    run.add_argument("--out-csv")
    run.add_argument("--out-summary")
    run.add_argument("--out-svg")

    sub.add_parser("relax", help="relaxation time and effective spectrum")
    sub.add_parser("equilibrium", help="final equilibrium from particle conservation")

    sw = sub.add_parser("sweep", help="run a grid over one config key")
    sw.add_argument("--key", required=True)
    grid = sw.add_mutually_exclusive_group(required=True)
    grid.add_argument("--grid", help="LO:HI:NUM")
    grid.add_argument("--values", help="comma-separated list")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--out")

    va = sub.add_parser("validate", help="certify the single-particle equations against the many-body oracle")
    va.add_argument("--t-end", type=float, default=50.0)
    va.add_argument("--n-max", type=int, default=8)
    va.add_argument("--samples", type=int, default=101)

    for name in COMMANDS:
        sub.choices[name].add_argument("config")
    return p


def _error_line(code, exc) -> str:
    msg = str(exc).replace('"', "'")
    return f'error: code={code} type={type(exc).__name__} message="{msg}"\n'


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        sys.stderr.write(_error_line(EXIT_CONFIG, exc))
        return EXIT_CONFIG
    except (TransportError, ArithmeticError, OSError) as exc:
        sys.stderr.write(_error_line(EXIT_NUMERIC, exc))
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
