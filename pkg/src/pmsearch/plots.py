"""Figure rendering for the report paths (PNG files next to the CSVs)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import AblationReport


def plot_traces(traces: list[list[tuple[int, float, float]]], path: str | Path,
                title: str = "Configuration search progression") -> None:
    """Best-so-far curves per fold plus their mean."""
    fig, ax = plt.subplots(figsize=(7, 4))
    length = min(len(t) for t in traces)
    xs = np.arange(1, length + 1)
    curves = np.array([[row[2] for row in t[:length]] for t in traces])
    for i, curve in enumerate(curves):
        ax.plot(xs, curve, alpha=0.35, lw=1, label=f"fold {i}")
    ax.plot(xs, curves.mean(axis=0), color="black", lw=2, label="mean")
    lo, hi = curves.min(axis=0), curves.max(axis=0)
    ax.fill_between(xs, lo, hi, color="gray", alpha=0.15)
    ax.set_xlabel("evaluation")
    ax.set_ylabel("best score so far")
    ax.set_title(title)
    ax.legend(fontsize=8, ncols=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_ablation(report: AblationReport, path: str | Path,
                  title: str = "Ablation study") -> None:
    """Horizontal bars of per-group score change relative to the baseline."""
    rows = list(report.rows) + ([report.reduced] if report.reduced else [])
    names = [f"{r.sign}{r.name}{' ' + r.stars if r.stars else ''}" for r in rows]
    deltas = [r.delta_percent for r in rows]
    fig, ax = plt.subplots(figsize=(7, 0.32 * len(rows) + 1.4))
    ypos = np.arange(len(rows))[::-1]
    colors = ["#b2182b" if d < 0 else "#2166ac" for d in deltas]
    ax.barh(ypos, deltas, color=colors)
    ax.set_yticks(ypos, names, fontsize=8)
    ax.axvline(0, color="black", lw=0.8)
    ax.set_xlabel("score change vs baseline (%)")
    ax.set_title(f"{title} (baseline {report.baseline:.4f})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
