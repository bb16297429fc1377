"""Matplotlib figure rendering for the CLI report paths (written to files
next to the delimited outputs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from linkatlas.generator import GenerationStats


def save_rejection_curve(stats: GenerationStats, path) -> None:
    sizes = sorted(n for n in stats.accepted_by_n if stats.accepted_by_n[n] > 0)
    means = [stats.mean_attempts(n) for n in sizes]
    medians = [stats.median_attempts(n) for n in sizes]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sizes, means, "o-", label="mean attempts per success")
    ax.plot(sizes, medians, "s--", label="median attempts per success")
    ax.set_xlabel("joint count")
    ax.set_ylabel("random poses per accepted mechanism")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_curve_grid(paths: list[np.ndarray], out_path, title: str = "", cols: int = 8) -> None:
    count = len(paths)
    rows = max(1, (count + cols - 1) // cols)
    fig, axes = plt.subplots(rows, cols, figsize=(1.4 * cols, 1.4 * rows))
    axes = np.atleast_1d(axes).ravel()
    for ax in axes:
        ax.set_axis_off()
    for ax, pts in zip(axes, paths):
        ax.plot(pts[:, 0], pts[:, 1], lw=0.8)
        ax.set_xlim(-0.05, 1.05)
        ax.set_ylim(-0.05, 1.05)
        ax.set_aspect("equal")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def save_retrieval_overlays(query: np.ndarray, hits, out_path) -> None:
    """Query curve overlaid on each retrieved curve, distance in the title."""
    k = max(len(hits), 1)
    fig, axes = plt.subplots(1, k, figsize=(2.4 * k, 2.6))
    axes = np.atleast_1d(axes).ravel()
    for ax in axes:
        ax.set_axis_off()
    for ax, hit in zip(axes, hits):
        ax.plot(query[:, 0], query[:, 1], "k-", lw=1.2, label="target")
        ax.plot(hit.curve[:, 0], hit.curve[:, 1], "r--", lw=1.0, label="retrieved")
        flag = " (above threshold)" if hit.above_threshold else ""
        ax.set_title(f"d={hit.distance:.4f}{flag}", fontsize=8)
        ax.set_aspect("equal")
    axes[0].legend(fontsize=6, loc="lower left")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def save_bench_chart(results: dict[str, tuple[float, float]], out_path) -> None:
    names = list(results)
    means = [results[n][0] for n in names]
    stds = [results[n][1] for n in names]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, means, yerr=stds, capsize=4)
    ax.set_ylabel("time to simulate the workload (s)")
    ax.set_yscale("log")
    plt.setp(ax.get_xticklabels(), rotation=15, ha="right")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
