"""Deterministic SVG line and scatter charts."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "gravdengue"


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def line_chart(path, x, series: dict, xlabel: str, ylabel: str, title: str = "", legend: bool = True, max_legend: int = 10):
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, y in series.items():
        ax.plot(x, y, label=str(label), linewidth=1)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if legend and 0 < len(series) <= max_legend:
        ax.legend(fontsize="small")
    _save(fig, path)


def scatter_chart(path, groups: dict, xlabel: str, ylabel: str, title: str = ""):
    """``groups`` maps a label to ``(x, y)`` arrays."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, (x, y) in groups.items():
        ax.scatter(x, y, s=8, label=str(label))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if 1 < len(groups) <= 10:
        ax.legend(fontsize="small")
    _save(fig, path)
