"""Serialization of trajectories and summaries, plus quick-look SVG plots."""

from __future__ import annotations

import math

import numpy as np

from .errors import TransportError


class OutputError(TransportError, OSError):
    pass


def csv_header(M: int) -> list[str]:
    return (
        ["t"]
        + [f"n_{i}" for i in range(1, M + 1)]
        + [f"j_{i}" for i in range(1, M)]
        + ["mu_L", "mu_R", "N_L", "N_R", "I", "coh_max"]
    )


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def trajectory_table(traj) -> np.ndarray:
    obs = traj.observables()
    cols = [obs["t"][:, None], obs["n"], obs["j"],
            np.column_stack([obs["mu_L"], obs["mu_R"], obs["N_L"], obs["N_R"], obs["I"], obs["coh"]])]
    return np.hstack(cols)


def _open(path):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None


def write_csv(traj, path) -> None:
    table = trajectory_table(traj)
    with _open(path) as fh:
        fh.write(",".join(csv_header(traj.model.M)) + "\n")
        for row in table:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def render_summary(summary) -> str:
    return "".join(f"{k}={format_value(v)}\n" for k, v in summary.as_items())


def write_summary(summary, path) -> None:
    with _open(path) as fh:
        fh.write(render_summary(summary))


def write_svg(traj, path, logx=True) -> None:
    """Three stacked panels: site populations, bond currents, long-range coherence."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    obs = traj.observables()
    t = obs["t"]
    keep = t > 0 if logx else np.ones_like(t, dtype=bool)
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 8))
    for i in range(obs["n"].shape[1]):
        axes[0].plot(t[keep], obs["n"][keep, i], lw=1, label=f"n_{i + 1}")
    axes[0].set_ylabel("site population")
    axes[0].legend(fontsize="x-small", ncol=4)
    for i in range(obs["j"].shape[1]):
        axes[1].plot(t[keep], obs["j"][keep, i], lw=1)
    axes[1].plot(t[keep], obs["I"][keep], "k--", lw=1, label="I")
    axes[1].set_ylabel("current")
    axes[1].legend(fontsize="x-small")
    axes[2].plot(t[keep], obs["coh"][keep], lw=1)
    axes[2].set_yscale("log")
    axes[2].set_ylabel("max long-range |sigma_jk|")
    axes[2].set_xlabel("t J")
    if logx:
        axes[2].set_xscale("log")
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror}") from None
    finally:
        plt.close(fig)


def write_outputs(traj, summary, csv_path=None, summary_path=None, svg_path=None) -> None:
    if csv_path:
        write_csv(traj, csv_path)
    if summary_path:
        write_summary(summary, summary_path)
    if svg_path:
        write_svg(traj, svg_path)
