"""Static report figures written next to the CSV output.

Figures are built on bare ``Figure`` objects with the Agg canvas, so nothing
here touches pyplot's global state or needs a display.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .experiments import Comparison, SweepRow
from .runner import SimLog

__all__ = ["STYLE", "render_run", "render_comparison", "render_sweep"]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 120,
}


def _figure(width: float = 6.0, rows: int = 1, cols: int = 1, height: float | None = None):
    height = height or width * GOLDEN * (0.6 * rows if rows > 1 else 1.0)
    fig = Figure(figsize=(width, height))
    FigureCanvasAgg(fig)
    axes = fig.subplots(rows, cols, squeeze=False)
    return fig, axes


def _save(fig: Figure, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    return path


def _trajectory(log: SimLog, path: Path) -> Path:
    fig, ax = _figure(5.0, height=5.0)
    ax = ax[0, 0]
    ax.plot(log["x_r"], log["y_r"], "--", color="0.4", label="reference")
    ax.plot(log["x"], log["y"], color="C0", label="robot")
    ax.plot(log["x"][0], log["y"][0], "o", color="C0", ms=4)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best")
    return _save(fig, path)


def _posture_errors(log: SimLog, path: Path) -> Path:
    fig, axes = _figure(6.0, rows=2)
    t = log["t"]
    top, bottom = axes[0, 0], axes[1, 0]
    top.plot(t, log["e_x"], label="$e_x$ [m]")
    top.plot(t, log["e_y"], label="$e_y$ [m]")
    top.plot(t, log["e_theta"], label=r"$e_\theta$ [rad]")
    top.legend(loc="upper right")
    top.set_ylabel("posture error")
    bottom.semilogy(t, np.maximum(log.ep_norm, 1e-16), color="C3", label=r"$\|e_p\|$")
    bottom.semilogy(t, np.maximum(log["V_lyap"], 1e-16), color="C4", label="V")
    bottom.legend(loc="upper right")
    bottom.set_xlabel("t [s]")
    return _save(fig, path)


def _velocities(log: SimLog, path: Path) -> Path:
    fig, axes = _figure(6.0, rows=3)
    t = log["t"]
    axes[0, 0].plot(t, log["v_c"], "--", color="0.4", label="$v_c$")
    axes[0, 0].plot(t, log["v"], label="$v$")
    axes[0, 0].set_ylabel("v [m/s]")
    axes[0, 0].legend(loc="upper right")
    axes[1, 0].plot(t, log["w_c"], "--", color="0.4", label=r"$\omega_c$")
    axes[1, 0].plot(t, log["w"], label=r"$\omega$")
    axes[1, 0].set_ylabel("w [rad/s]")
    axes[1, 0].legend(loc="upper right")
    axes[2, 0].plot(t, log["e_c_norm"], color="C3")
    axes[2, 0].set_ylabel(r"$\|e_c\|$")
    axes[2, 0].set_xlabel("t [s]")
    return _save(fig, path)


def _commands(log: SimLog, path: Path) -> Path:
    fig, axes = _figure(6.0, rows=2)
    t = log["t"]
    for i, ax in enumerate(axes[:, 0], start=1):
        ax.plot(t, log[f"u_fb{i}"], label="PID")
        ax.plot(t, log[f"u_ff{i}"], label="NN")
        ax.set_ylabel(f"channel {i} [V]")
        ax.legend(loc="upper right")
    axes[1, 0].set_xlabel("t [s]")
    return _save(fig, path)


def render_run(log: SimLog, directory: str | Path, stem: str = "run") -> list[Path]:
    """Write trajectory, posture-error and velocity figures; returns the paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    with mpl.rc_context(STYLE):
        paths = [
            _trajectory(log, out / f"{stem}_trajectory.png"),
            _posture_errors(log, out / f"{stem}_posture_error.png"),
            _velocities(log, out / f"{stem}_velocity.png"),
        ]
        if log.mode != "kinematic-ideal":
            paths.append(_commands(log, out / f"{stem}_commands.png"))
    return paths


def render_comparison(cmp: Comparison, directory: str | Path, labels: Sequence[str] = ("A", "B")) -> list[Path]:
    if cmp.log_a is None or cmp.log_b is None:
        raise ValueError("comparison was run without keep_logs=True")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    with mpl.rc_context(STYLE):
        fig, axes = _figure(6.0, rows=2)
        for log, label in ((cmp.log_a, labels[0]), (cmp.log_b, labels[1])):
            axes[0, 0].plot(log["t"], log["e_c_norm"], label=label)
            axes[1, 0].semilogy(log["t"], np.maximum(log.ep_norm, 1e-16), label=label)
        axes[0, 0].set_ylabel(r"$\|e_c\|$")
        axes[1, 0].set_ylabel(r"$\|e_p\|$")
        axes[1, 0].set_xlabel("t [s]")
        axes[0, 0].legend(loc="upper right")
        paths = [_save(fig, out / "compare_errors.png")]
    return paths


def render_sweep(rows: Sequence[SweepRow], directory: str | Path) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    with mpl.rc_context(STYLE):
        fig, axes = _figure(6.0)
        ax = axes[0, 0]
        labels = [f"{r.k1:g}/{r.k2:g}/{r.k3:g}" for r in rows]
        vals = [np.nan if r.metrics.settling_time is None else r.metrics.settling_time for r in rows]
        ax.bar(range(len(rows)), vals, color="C0")
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels(labels, rotation=60, ha="right")
        ax.set_ylabel("settling time [s]")
        ax.set_xlabel("k1/k2/k3 (ranked)")
        paths = [_save(fig, out / "sweep_settling.png")]
    return paths
