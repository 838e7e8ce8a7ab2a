"""Figures written next to the CSV/JSON outputs of the command line tool."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_rtf(freqs, h, path, title=None):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.semilogy(freqs, np.abs(h), lw=1)
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("|H|")
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_field(u, v, values, path, labels=("x [m]", "y [m]"), title=None):
    fig, ax = plt.subplots(figsize=(5, 5 * (v.max() - v.min()) / max(u.max() - u.min(), 1e-9)))
    cs = ax.contourf(u, v, values, levels=21, cmap="RdBu_r", vmin=-1, vmax=1)
    ax.contour(u, v, values, levels=[0.0], colors="k", linewidths=0.8)
    fig.colorbar(cs, ax=ax, shrink=0.8)
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_sweep(summary, axis_label, path):
    """Success rate, iterations and time against the swept parameter."""
    x = [row["sweep_value"] for row in summary]
    panels = [
        ("success_rate", "success rate"),
        ("avg_iterations", "avg. outer iterations"),
        ("avg_time", "avg. time [s]"),
    ]
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.2))
    for ax, (key, label) in zip(axes, panels):
        y = [math.nan if row[key] is None else row[key] for row in summary]
        ax.plot(x, y, "o-")
        ax.set_xlabel(axis_label)
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    _save(fig, path)
