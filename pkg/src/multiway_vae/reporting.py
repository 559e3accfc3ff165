"""Report serialisation: figure-ready CSV tables and rendered figures.

Every plot has a CSV twin carrying exactly the plotted columns, so the
figures can be regenerated or restyled downstream without rerunning the
pipeline.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .localization import LocationScore, localization_table
from .pipeline import ScoreResult


def write_detection_csv(path: str | Path, result: ScoreResult) -> None:
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["event_index", "group_label", "recon_prob_log", "nll", "decision"])
        for e in result.events:
            writer.writerow(
                [
                    e.event_index,
                    e.group,
                    repr(e.score.log_recon_prob),
                    repr(e.score.neg_log_likelihood),
                    e.decision,
                ]
            )


def write_severity_csv(path: str | Path, result: ScoreResult) -> None:
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["group_label", "mean_nll"])
        for group, mean in result.severity:
            writer.writerow([group, repr(mean)])


def write_localization_csv(path: str | Path, scores: Sequence[LocationScore]) -> None:
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["sensor_label", "knn_score", "rank"])
        for s in localization_table(scores):
            writer.writerow([s.sensor_label, repr(s.knn_score), s.rank])


def write_localization_events_csv(path: str | Path, result: ScoreResult) -> None:
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["event_index", "sensor_label", "knn_score", "rank"])
        for e in result.events:
            for s in e.location_scores:
                writer.writerow([e.event_index, s.sensor_label, repr(s.knn_score), s.rank])


def write_summary_csv(path: str | Path, result: ScoreResult) -> None:
    rows = [
        ("n_events", len(result.events)),
        ("n_flagged", result.n_flagged),
        ("threshold", repr(result.threshold)),
    ]
    if result.metrics is not None:
        precision, recall, f_score = result.metrics
        rows += [
            ("precision", repr(precision)),
            ("recall", repr(recall)),
            ("f_score", repr(f_score)),
        ]
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["key", "value"])
        writer.writerows(rows)


def write_loss_curve_csv(path: str | Path, curve: Sequence[float]) -> None:
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(curve):
            writer.writerow([epoch, repr(loss)])


def render_scores_figure(path: str | Path, result: ScoreResult) -> None:
    """Per-event anomaly scores with the threshold line and the solid trace
    connecting group means."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    groups = [g for g, _ in result.severity]
    cmap = plt.get_cmap("tab10")
    colors = {g: cmap(i % 10) for i, g in enumerate(groups)}

    for g in groups:
        idx = [i for i, e in enumerate(result.events) if e.group == g]
        nll = [result.events[i].score.neg_log_likelihood for i in idx]
        ax.scatter(idx, nll, s=14, color=colors[g], label=g, alpha=0.8)

    centers, means = [], []
    for g, mean in result.severity:
        idx = [i for i, e in enumerate(result.events) if e.group == g]
        centers.append(float(np.mean(idx)))
        means.append(mean)
    ax.plot(centers, means, "k-", marker="o", linewidth=1.5, label="group mean")
    ax.axhline(result.threshold, linestyle="--", color="gray", label="threshold")

    ax.set_xlabel("event")
    ax.set_ylabel("anomaly score (negative log-likelihood)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_localization_figure(path: str | Path, scores: Sequence[LocationScore]) -> None:
    """Per-sensor k-NN anomaly score bar chart."""
    fig, ax = plt.subplots(figsize=(8, 4))
    labels = [s.sensor_label for s in scores]
    values = [s.knn_score for s in scores]
    top = min(s.rank for s in scores)
    bar_colors = ["firebrick" if s.rank == top else "steelblue" for s in scores]
    ax.bar(range(len(scores)), values, color=bar_colors)
    ax.set_xticks(range(len(scores)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_xlabel("sensor")
    ax.set_ylabel("k-NN anomaly score")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_loss_figure(path: str | Path, curve: Sequence[float]) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(range(len(curve)), curve, "-")
    ax.set_xlabel("epoch")
    ax.set_ylabel("training loss")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_score_report(out_dir: str | Path, result: ScoreResult) -> dict[str, Path]:
    """Write the full report bundle; returns the paths that were written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out_dir / "report.csv",
        "severity": out_dir / "severity.csv",
        "localization": out_dir / "localization.csv",
        "localization_events": out_dir / "localization_events.csv",
        "summary": out_dir / "summary.csv",
        "scores_figure": out_dir / "scores.png",
        "localization_figure": out_dir / "localization.png",
    }
    write_detection_csv(paths["report"], result)
    write_severity_csv(paths["severity"], result)
    write_localization_csv(paths["localization"], result.localization_mean)
    write_localization_events_csv(paths["localization_events"], result)
    write_summary_csv(paths["summary"], result)
    render_scores_figure(paths["scores_figure"], result)
    render_localization_figure(paths["localization_figure"], result.localization_mean)
    return paths
