"""Probabilistic anomaly scoring, threshold calibration, and metrics.

An event's score comes from L latent draws: the reconstruction probability
is the Monte Carlo mean of the decoder's density at the input, kept in log
space via log-sum-exp because the linear-space mean underflows once the
input has more than a few dozen dimensions.  The working anomaly score is
the negative mean log-likelihood (high = anomalous); the threshold is an
upper quantile of the training scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .multiway import EventSlice
from .vae import VaeParams, mc_reconstruction

HEALTHY = "healthy"
DAMAGE = "damage"


@dataclass
class AnomalyScore:
    """Scores for one event.

    log_recon_prob      log of the mean reconstruction density (log-sum-exp)
    neg_log_likelihood  -(1/L) * sum of per-draw log densities; the decision score
    per_sensor_errors   mean squared residual per sensor (length n), feeds
                        the localization stage
    """

    log_recon_prob: float
    neg_log_likelihood: float
    per_sensor_errors: np.ndarray

    @property
    def recon_prob(self) -> float:
        """Linear-space reconstruction probability (may underflow to 0.0)."""
        return float(np.exp(self.log_recon_prob))


@dataclass
class DetectionConfig:
    mc_samples: int = 10
    threshold_quantile: float = 0.03
    seed: int = 0

    def __post_init__(self):
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples}")
        if not (0.0 < self.threshold_quantile < 1.0):
            raise ValueError(
                f"threshold_quantile must be in (0, 1), got {self.threshold_quantile}"
            )


def event_seed(seed: int, event_index: int) -> int:
    """Noise-stream seed for one event: base seed XOR event index."""
    return int(seed) ^ int(event_index)


def reconstruction_probability(
    params: VaeParams, event: EventSlice, mc_samples: int, seed: int
) -> AnomalyScore:
    """Score one event slice with ``mc_samples`` posterior draws.

    Latent samples follow z = mu_z + sigma_z * eps with eps from the seeded
    generator, so a fixed seed gives an identical score on every call.
    """
    x = event.flat
    if not np.all(np.isfinite(x)):
        raise ValueError(f"event {event.event_index} contains non-finite features")
    if x.shape != (params.d_in,):
        raise ValueError(
            f"model expects {params.d_in} inputs, event {event.event_index} "
            f"provides {x.shape[0]}"
        )
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((mc_samples, params.latent_dim))
    lls, sq_resid = mc_reconstruction(params, x, eps)
    if not np.all(np.isfinite(lls)):
        raise ValueError("model produced non-finite log-likelihoods; is it trained?")

    # log((1/L) * sum exp(ll)) without leaving log space
    m = float(np.max(lls))
    log_rp = m + float(np.log(np.mean(np.exp(lls - m))))
    nll = -float(np.mean(lls))
    per_sensor = sq_resid.reshape(event.n_sensors, event.n_features).mean(axis=1)
    return AnomalyScore(
        log_recon_prob=log_rp,
        neg_log_likelihood=nll,
        per_sensor_errors=per_sensor,
    )


def score_events(
    params: VaeParams, events: Sequence[EventSlice], cfg: DetectionConfig
) -> list[AnomalyScore]:
    """Score a batch; each event uses its own seed-derived noise stream, so
    scores do not depend on batch order."""
    return [
        reconstruction_probability(
            params, ev, cfg.mc_samples, event_seed(cfg.seed, ev.event_index)
        )
        for ev in events
    ]


def calibrate_threshold(train_scores: Sequence[AnomalyScore], cfg: DetectionConfig) -> float:
    """Upper (1 - threshold_quantile) quantile of training anomaly scores,
    linearly interpolated."""
    if len(train_scores) == 0:
        raise ValueError("cannot calibrate a threshold from zero scores")
    nlls = np.array([s.neg_log_likelihood for s in train_scores])
    return float(np.quantile(nlls, 1.0 - cfg.threshold_quantile))


def classify(score: AnomalyScore, threshold: float) -> str:
    """Damage iff the score strictly exceeds the threshold."""
    return DAMAGE if score.neg_log_likelihood > threshold else HEALTHY


def severity_trace(
    scored_groups: Sequence[tuple[str, AnomalyScore]]
) -> list[tuple[str, float]]:
    """Mean anomaly score per group, in order of first appearance."""
    if len(scored_groups) == 0:
        raise ValueError("no scores to trace")
    order: list[str] = []
    buckets: dict[str, list[float]] = {}
    for group, score in scored_groups:
        if group not in buckets:
            order.append(group)
            buckets[group] = []
        buckets[group].append(score.neg_log_likelihood)
    return [(g, float(np.mean(buckets[g]))) for g in order]


def evaluate_decisions(
    decisions: Sequence[bool], ground_truth: Sequence[bool]
) -> tuple[float, float, float]:
    """Precision, recall, and F-score with damage as the positive class.

    Degenerate denominators yield 0 rather than raising.
    """
    if len(decisions) != len(ground_truth):
        raise ValueError(
            f"decision count {len(decisions)} != ground truth count {len(ground_truth)}"
        )
    if len(decisions) == 0:
        raise ValueError("no decisions to evaluate")
    tp = sum(1 for d, t in zip(decisions, ground_truth) if d and t)
    fp = sum(1 for d, t in zip(decisions, ground_truth) if d and not t)
    fn = sum(1 for d, t in zip(decisions, ground_truth) if not d and t)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f_score = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f_score
