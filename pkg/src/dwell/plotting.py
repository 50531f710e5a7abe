"""SVG plots of traces

Needs the ``plot`` extra. matplotlib is imported on first use with the Agg
backend so nothing here opens a window.
"""

from pathlib import Path
from typing import Dict

import numpy as np

from .exceptions import ScenarioError
from .logger import logger
from .trace import Trace


def _pyplot():
    try:
        import matplotlib  # pylint: disable=import-outside-toplevel
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt  # pylint: disable=import-outside-toplevel
    except ImportError as exc:
        raise ScenarioError("--plot needs matplotlib, install dwell[plot]") from exc
    return plt


def _save(plt, fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path


def plot_trace(trace: Trace, directory, aircraft: bool = False, prefix: str = "") -> Path:
    """States against commands, and the adaptive input"""
    if aircraft:
        return plot_flight(trace, directory, prefix)
    plt = _pyplot()
    t = trace.column("t")
    fig, axes = plt.subplots(3, 1, figsize=(10, 9), sharex=True)
    for index in range(trace.block("x").shape[1]):
        axes[0].plot(t, trace.column("x_{}".format(index)), label="x_{}".format(index))
        axes[0].plot(t, trace.column("x_ref_{}".format(index)), "--", label="x_ref_{}".format(index))
    axes[0].set_ylabel("state")
    for index in range(trace.block("u").shape[1]):
        axes[1].plot(t, trace.column("u_{}".format(index)), label="u_{}".format(index))
        axes[1].plot(t, trace.column("eta1_{}".format(index)), ":", label="eta1_{}".format(index))
    axes[1].set_ylabel("input")
    axes[2].semilogy(t, np.maximum(np.linalg.norm(trace.block("xtilde"), axis=1), 1e-16))
    axes[2].set_ylabel("||xtilde||")
    axes[2].set_xlabel("t (s)")
    for switch_time in t[trace.column("switch") > 0]:
        for ax in axes:
            ax.axvline(switch_time, color="k", linewidth=0.5, alpha=0.4)
    for ax in axes[:2]:
        ax.legend(fontsize=7, ncol=2)
        ax.grid(True, alpha=0.3)
    return _save(plt, fig, Path(directory) / "{}states.svg".format(prefix))


def plot_flight(trace: Trace, directory, prefix: str = "") -> Path:
    """Attitude against commands, and the adaptive input against pitch"""
    plt = _pyplot()
    t = trace.column("t")
    fig, axes = plt.subplots(3, 1, figsize=(10, 9), sharex=True)
    for name in ("phi", "theta"):
        axes[0].plot(t, np.degrees(trace.column(name)), label=name)
        axes[0].plot(t, np.degrees(trace.column(name + "_cmd")), "--", label=name + "_cmd")
    axes[0].set_ylabel("deg")
    axes[1].plot(t, np.degrees(trace.column("theta")), label="theta (deg)")
    ax_eta = axes[1].twinx()
    ax_eta.plot(t, trace.column("eta1_1"), color="tab:red", label="eta1 pitch")
    ax_eta.set_ylabel("adaptive input")
    axes[1].set_ylabel("pitch (deg)")
    for name in ("Cl_da", "Cm_alpha", "Cn_beta"):
        line, = axes[2].plot(t, trace.column(name), label=name)
        axes[2].plot(t, trace.column(name + "_learned"), ":", color=line.get_color())
    axes[2].set_ylabel("coefficients")
    axes[2].set_xlabel("t (s)")
    for publish_time in t[trace.column("switch") > 0]:
        for ax in axes:
            ax.axvline(publish_time, color="k", linewidth=0.5, alpha=0.4)
    for ax in axes:
        ax.legend(fontsize=7, loc="upper right")
        ax.grid(True, alpha=0.3)
    return _save(plt, fig, Path(directory) / "{}flight.svg".format(prefix))


def plot_bounds(trace: Trace, bounds: Dict[str, float], directory) -> Path:
    """Error norms against their certified bounds"""
    plt = _pyplot()
    t = trace.column("t")
    x = trace.block("x")
    u = trace.block("u")
    series = {
        "xtilde": np.linalg.norm(trace.block("xtilde"), axis=1),
        "e": np.linalg.norm(trace.block("x_ref") - x, axis=1),
        "e_u": np.linalg.norm(trace.block("u_ref") - u, axis=1),
    }
    fig, axes = plt.subplots(len(series), 1, figsize=(10, 8), sharex=True)
    for ax, (name, values) in zip(axes, series.items()):
        ax.plot(t, values, label="||{}||".format(name))
        bound = bounds.get(name, np.nan)
        if np.isfinite(bound):
            ax.axhline(bound, color="tab:red", linestyle="--", label="bound")
        ax.legend(fontsize=7)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel("t (s)")
    return _save(plt, fig, Path(directory) / "bounds.svg")
