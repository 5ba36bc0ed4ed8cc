"""Matplotlib rendering for the CLI report path.

The analytics layer stays file-format pure (JSON/CSV); these helpers
turn its outputs into PNGs written next to the delimited files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analytics import AuditReport, LearningCurve


def save_curve_figure(curve: LearningCurve, path: str | Path, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.2))
    x = range(len(curve.mean))
    ax.plot(x, curve.mean, color="tab:blue", lw=1.2, label=f"mean return (window={curve.window})")
    if not curve.degenerate_band:
        ax.fill_between(x, curve.lower, curve.upper, color="tab:blue", alpha=0.2,
                        label="95% band")
    ax.set_xlabel("episode")
    ax.set_ylabel("return (rolling mean)")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_report_figure(report: AuditReport, path: str | Path, max_actions: int = 15) -> None:
    items = sorted(report.per_action_frequency.items(), key=lambda kv: -kv[1])[:max_actions]
    fig, ax = plt.subplots(figsize=(7, max(2.5, 0.35 * len(items) + 1.2)))
    if items:
        labels = [k if len(k) <= 48 else k[:45] + "..." for k, _ in items]
        values = [v for _, v in items]
        ax.barh(range(len(items)), values, color="tab:orange")
        ax.set_yticks(range(len(items)))
        ax.set_yticklabels(labels, fontsize=7)
        ax.invert_yaxis()
    ax.set_xlabel("fraction of actions in top subset")
    ax.set_title(
        f"experiment {report.experiment_id}: top {report.top_fraction:.0%} action mix "
        f"({report.n_episodes_analyzed} episodes)"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
