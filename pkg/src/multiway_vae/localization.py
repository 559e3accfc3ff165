"""Damage localization from per-sensor reconstruction-error profiles.

Because model inputs are flattened sensor-major, each sensor owns a
contiguous block of output nodes.  Averaging squared residuals over a
sensor's block gives a per-sensor error profile; the profiles of all
training events form a per-sensor reference history.  A new event is
localized by measuring, sensor by sensor, the mean distance from its
profile row to the k nearest rows of that sensor's healthy history:
sensors whose behaviour left the healthy envelope score high.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detection import event_seed
from .multiway import EventSlice, MultiwayTensor, all_slices
from .vae import VaeParams, mc_reconstruction


@dataclass
class LocalizationConfig:
    k: int = 5
    per_feature: bool = True  # profile width m per sensor; False -> scalar mean
    mc_samples: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples}")


@dataclass
class SensorIdentityBaseline:
    """Training-side reference for the localization stage.

    history has shape (n_train_events, n_sensors, profile_width); summary
    is its per-sensor mean over events, shape (n_sensors, profile_width).
    """

    history: np.ndarray
    summary: np.ndarray
    sensor_labels: list[str]

    def __post_init__(self):
        if self.history.ndim != 3:
            raise ValueError(f"history must be 3-d, got shape {self.history.shape}")
        if self.summary.shape != self.history.shape[1:]:
            raise ValueError(
                f"summary shape {self.summary.shape} must match history rows "
                f"{self.history.shape[1:]}"
            )
        if np.any(self.history < 0):
            raise ValueError("error profiles cannot be negative")
        if len(self.sensor_labels) != self.history.shape[1]:
            raise ValueError(
                f"expected {self.history.shape[1]} sensor labels, "
                f"got {len(self.sensor_labels)}"
            )

    @property
    def n_train_events(self) -> int:
        return self.history.shape[0]

    @property
    def profile_width(self) -> int:
        return self.history.shape[2]


@dataclass
class LocationScore:
    sensor_label: str
    knn_score: float
    rank: int  # 1 = highest score


def sensor_error_profile(
    params: VaeParams,
    event: EventSlice,
    mc_samples: int,
    seed: int,
    per_feature: bool = True,
) -> np.ndarray:
    """Squared residuals of one event, organised by sensor.

    Residuals (x - mu_x)^2 are averaged over ``mc_samples`` posterior draws
    and reshaped to (n_sensors, n_features); with ``per_feature=False``
    each sensor row is further reduced to its mean, width 1.
    """
    x = event.flat
    if x.shape != (params.d_in,):
        raise ValueError(
            f"model expects {params.d_in} inputs, event {event.event_index} "
            f"provides {x.shape[0]}"
        )
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((mc_samples, params.latent_dim))
    _, sq_resid = mc_reconstruction(params, x, eps)
    profile = sq_resid.reshape(event.n_sensors, event.n_features)
    if not per_feature:
        profile = profile.mean(axis=1, keepdims=True)
    return profile


def build_sensor_baseline(
    params: VaeParams, train: MultiwayTensor, cfg: LocalizationConfig
) -> SensorIdentityBaseline:
    """Profile every training event; the summary matrix is the per-sensor mean."""
    if train.n_events < 1:
        raise ValueError("training tensor has no events")
    profiles = [
        sensor_error_profile(
            params,
            ev,
            cfg.mc_samples,
            event_seed(cfg.seed, ev.event_index),
            per_feature=cfg.per_feature,
        )
        for ev in all_slices(train)
    ]
    history = np.stack(profiles)
    return SensorIdentityBaseline(
        history=history,
        summary=history.mean(axis=0),
        sensor_labels=list(train.sensor_labels),
    )


def knn_location_scores(
    baseline: SensorIdentityBaseline,
    params: VaeParams,
    event: EventSlice,
    cfg: LocalizationConfig,
    seed: int | None = None,
) -> list[LocationScore]:
    """Rank sensors by mean distance to their k nearest healthy profiles.

    ``seed`` defaults to the config's event-derived stream; pass one
    explicitly to reproduce a particular scoring draw.
    """
    if not (1 <= cfg.k <= baseline.n_train_events):
        raise ValueError(
            f"k={cfg.k} out of range for a baseline with "
            f"{baseline.n_train_events} training events"
        )
    per_feature = baseline.profile_width > 1
    if seed is None:
        seed = event_seed(cfg.seed, event.event_index)
    profile = sensor_error_profile(
        params, event, cfg.mc_samples, seed, per_feature=per_feature
    )
    if profile.shape != baseline.summary.shape:
        raise ValueError(
            f"event profile shape {profile.shape} does not match baseline "
            f"{baseline.summary.shape}"
        )
    n = profile.shape[0]
    scores = np.empty(n)
    for i in range(n):
        dists = np.linalg.norm(baseline.history[:, i, :] - profile[i], axis=1)
        nearest = np.sort(dists)[: cfg.k]
        scores[i] = nearest.mean()

    order = sorted(range(n), key=lambda i: (-scores[i], i))  # ties: label order
    ranked = [None] * n
    for rank0, i in enumerate(order):
        ranked[i] = LocationScore(
            sensor_label=baseline.sensor_labels[i],
            knn_score=float(scores[i]),
            rank=rank0 + 1,
        )
    return ranked


def localization_table(scores: Sequence[LocationScore]) -> list[LocationScore]:
    """Scores sorted by rank, ready for serialisation."""
    if len(scores) == 0:
        raise ValueError("no location scores to tabulate")
    return sorted(scores, key=lambda s: s.rank)
