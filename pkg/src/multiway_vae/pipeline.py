"""End-to-end training and scoring flows shared by the CLI and the tests.

Training: preprocess raw signals into standardized spectral features,
fit the model, calibrate the anomaly threshold on the training scores,
and build the per-sensor localization baseline.  Scoring: replay the
stored preprocessing on new raw signals, score and classify every event,
localize, and summarise severity per group.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .artifact import ModelArtifact
from .config import RunConfig, config_to_dict
from .detection import (
    AnomalyScore,
    classify,
    calibrate_threshold,
    evaluate_decisions,
    event_seed,
    reconstruction_probability,
    score_events,
    severity_trace,
    DAMAGE,
)
from .localization import (
    LocationScore,
    build_sensor_baseline,
    knn_location_scores,
)
from .multiway import (
    EventSlice,
    FeatureScaler,
    all_slices,
    build_tensor,
)
from .vae import train_vae


def worker_count() -> int:
    """Scoring fan-out width; the MVA_THREADS variable caps it (default 1)."""
    raw = os.environ.get("MVA_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"MVA_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"MVA_THREADS must be a positive integer, got {raw!r}")
    return n


def train_model(
    raw_events: np.ndarray,
    sensor_labels: Sequence[str] | None,
    cfg: RunConfig,
    on_epoch: Callable[[int, float], None] | None = None,
) -> tuple[ModelArtifact, list[float]]:
    """Fit the full detector on healthy raw signals.

    raw_events: (n_events, n_sensors, signal_length).  Returns the artifact
    and the per-epoch training loss curve.
    """
    features = build_tensor(raw_events, cfg.preprocess, sensor_labels)
    scaler = FeatureScaler.fit(features)
    standardized = scaler.transform(features)
    slices = all_slices(standardized)

    params, curve = train_vae(slices, cfg.vae, on_epoch=on_epoch)

    train_scores = score_events(params, slices, cfg.detection)
    threshold = calibrate_threshold(train_scores, cfg.detection)
    baseline = build_sensor_baseline(params, standardized, cfg.localization)

    artifact = ModelArtifact(
        preprocess=cfg.preprocess,
        scaler=scaler,
        sensor_labels=list(standardized.sensor_labels),
        vae=params,
        threshold=threshold,
        baseline=baseline,
        detection=cfg.detection,
        localization=cfg.localization,
        seed=cfg.seed,
        run_config=config_to_dict(cfg),
    )
    return artifact, curve


@dataclass
class ScoredEvent:
    event_index: int
    group: str
    score: AnomalyScore
    decision: str
    location_scores: list[LocationScore]


@dataclass
class ScoreResult:
    events: list[ScoredEvent]
    threshold: float
    severity: list[tuple[str, float]]
    localization_mean: list[LocationScore]
    metrics: tuple[float, float, float] | None  # (precision, recall, f_score)

    @property
    def n_flagged(self) -> int:
        return sum(1 for e in self.events if e.decision == DAMAGE)


def _standardized_slices(artifact: ModelArtifact, raw_events: np.ndarray,
                         sensor_labels: Sequence[str] | None) -> list[EventSlice]:
    features = build_tensor(raw_events, artifact.preprocess, sensor_labels)
    model_shape = artifact.scaler.mean.shape
    data_shape = features.values.shape[:2]
    if data_shape != model_shape:
        raise ValueError(
            f"model expects (sensors, features)={model_shape}, "
            f"data provides {data_shape}"
        )
    return all_slices(artifact.scaler.transform(features))


def score_model(
    artifact: ModelArtifact,
    raw_events: np.ndarray,
    sensor_labels: Sequence[str] | None = None,
    groups: Sequence[str] | None = None,
    ground_truth: Sequence[bool] | None = None,
) -> ScoreResult:
    """Score raw events against a trained artifact.

    ``groups`` labels each event for the severity trace; ``ground_truth``
    (damage flags) adds precision/recall/F metrics.  Events fan out over
    MVA_THREADS workers; per-event noise streams are derived from the
    event index, so results are identical at any worker count and in any
    batch order.
    """
    slices = _standardized_slices(artifact, raw_events, sensor_labels)
    if groups is not None and len(groups) != len(slices):
        raise ValueError(f"{len(groups)} group labels for {len(slices)} events")
    if ground_truth is not None and len(ground_truth) != len(slices):
        raise ValueError(f"{len(ground_truth)} truth labels for {len(slices)} events")

    det, loc = artifact.detection, artifact.localization

    def score_one(ev: EventSlice) -> tuple[AnomalyScore, list[LocationScore]]:
        score = reconstruction_probability(
            artifact.vae, ev, det.mc_samples, event_seed(det.seed, ev.event_index)
        )
        locs = knn_location_scores(artifact.baseline, artifact.vae, ev, loc)
        return score, locs

    n_workers = worker_count()
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(score_one, slices))
    else:
        outcomes = [score_one(ev) for ev in slices]

    events = []
    for ev, (score, locs) in zip(slices, outcomes):
        group = groups[ev.event_index] if groups is not None else "all"
        events.append(
            ScoredEvent(
                event_index=ev.event_index,
                group=group,
                score=score,
                decision=classify(score, artifact.threshold),
                location_scores=locs,
            )
        )

    severity = severity_trace([(e.group, e.score) for e in events])
    localization_mean = _aggregate_localization(events)
    metrics = None
    if ground_truth is not None:
        decisions = [e.decision == DAMAGE for e in events]
        metrics = evaluate_decisions(decisions, list(ground_truth))
    return ScoreResult(
        events=events,
        threshold=artifact.threshold,
        severity=severity,
        localization_mean=localization_mean,
        metrics=metrics,
    )


def _aggregate_localization(events: list[ScoredEvent]) -> list[LocationScore]:
    """Mean per-sensor score over damage-flagged events (all events when
    nothing is flagged), re-ranked."""
    flagged = [e for e in events if e.decision == DAMAGE] or events
    order = [s.sensor_label for s in flagged[0].location_scores]  # sensor order
    by_label = {lab: [] for lab in order}
    for e in flagged:
        for s in e.location_scores:
            by_label[s.sensor_label].append(s.knn_score)
    means = {lab: float(np.mean(by_label[lab])) for lab in order}
    ranked_labels = sorted(order, key=lambda lab: (-means[lab], order.index(lab)))
    ranks = {lab: r + 1 for r, lab in enumerate(ranked_labels)}
    return [
        LocationScore(sensor_label=lab, knn_score=means[lab], rank=ranks[lab])
        for lab in order
    ]
