"""Matplotlib rendering of report figures to standalone files.

Used by the bench path (rank-sum charts) and the explain path (importance
bars, interaction heatmap, neighbor counts, prediction traces). Files are
written in whatever format the path suffix implies; the CLI uses .svg.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import IoError

_FIGSIZE = (7.0, 4.2)


def _finish(fig, path: str) -> str:
    try:
        fig.tight_layout()
        fig.savefig(path)
    except OSError as exc:
        raise IoError(f"cannot write figure {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def bar_chart(labels, values, title: str, ylabel: str, path: str) -> str:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    x = np.arange(len(labels))
    ax.bar(x, values, color="#4878a8")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(axis="y", alpha=0.3)
    return _finish(fig, path)


def heatmap(matrix, labels, title: str, path: str) -> str:
    matrix = np.asarray(matrix, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    limit = float(np.abs(matrix).max()) if matrix.size else 1.0
    if limit == 0:
        limit = 1.0
    im = ax.imshow(matrix, cmap="RdBu_r", vmin=-limit, vmax=limit)
    ax.set_xticks(range(len(labels)))
    ax.set_yticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_yticklabels(labels, fontsize=8)
    ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.85)
    return _finish(fig, path)


def line_chart(values, title: str, xlabel: str, ylabel: str, path: str) -> str:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(np.arange(1, len(values) + 1), values, marker="o")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def render_rank_chart(rank_table_dict: dict, group_name: str, out_dir: str,
                      fmt: str = "svg") -> str:
    models = rank_table_dict["models"]
    sums = rank_table_dict["rank_sum"]
    path = os.path.join(out_dir, f"rank_sum_{group_name}.{fmt}")
    return bar_chart(models, [sums[m] for m in models],
                     f"Rank sums ({group_name.replace('_', ' ')})", "rank sum", path)


def render_explanation(report_dict: dict, out_dir: str, fmt: str = "svg") -> list[str]:
    """Write the explanation figure set; returns the created paths."""
    names = report_dict["feature_names"]
    paths = [
        bar_chart(names, report_dict["importances"], "Global feature importance",
                  "mean |contribution|", os.path.join(out_dir, f"feature_importances.{fmt}")),
        heatmap(report_dict["mean_interactions"], names, "Mean pairwise interactions",
                os.path.join(out_dir, f"interaction_heatmap.{fmt}")),
    ]
    counts = report_dict.get("neighbor_counts")
    if counts is not None:
        idx = [str(i) for i in range(len(counts))]
        paths.append(bar_chart(idx, counts, "Neighbor usage counts", "times selected",
                               os.path.join(out_dir, f"neighbor_counts.{fmt}")))
    local = report_dict.get("local")
    if local is not None:
        paths.append(bar_chart(names, local["contributions"],
                               f"Local contributions (instance {local['instance']})",
                               "contribution",
                               os.path.join(out_dir, f"local_contributions.{fmt}")))
    trace = report_dict.get("prediction_trace")
    if trace is not None:
        paths.append(line_chart(trace, "Prediction as neighbors join", "neighbors used",
                                "prediction", os.path.join(out_dir, f"prediction_trace.{fmt}")))
    return paths
