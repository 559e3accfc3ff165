"""Three-way sensor data: container, preprocessing, slicing.

A multiway tensor holds one value per (sensor, feature, event).  Raw
acquisitions enter as per-event time signals, one signal per sensor; the
preprocessing path turns each signal into a row of spectral magnitudes
(zero-mean/unit-variance normalisation, then a truncated DFT magnitude
vector).  Frontal slices of the resulting tensor are the per-event
sensor-by-feature matrices consumed by the models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class MultiwayTensor:
    """Three-way array of shape (n_sensors, n_features, n_events).

    The value axis order is [sensor][feature][event].  Sensor labels are
    unique identifiers aligned with the first axis.
    """

    values: np.ndarray
    sensor_labels: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise ValueError(f"tensor values must be 3-d, got shape {self.values.shape}")
        n, m, t = self.values.shape
        if n < 1 or m < 1 or t < 1:
            raise ValueError(f"tensor dimensions must all be >= 1, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("tensor values contain non-finite entries")
        self.sensor_labels = [str(s) for s in self.sensor_labels]
        if len(self.sensor_labels) != n:
            raise ValueError(
                f"expected {n} sensor labels, got {len(self.sensor_labels)}"
            )
        if len(set(self.sensor_labels)) != n:
            raise ValueError("sensor labels must be unique")

    @property
    def n_sensors(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def n_events(self) -> int:
        return self.values.shape[2]

    def event_matrices(self) -> np.ndarray:
        """All events as a (n_events, n_sensors, n_features) view."""
        return np.moveaxis(self.values, 2, 0)


@dataclass
class EventSlice:
    """One frontal slice: the (n_sensors, n_features) matrix of a single event.

    ``flat`` is the canonical sensor-major flattening: sensor 0's features
    first, then sensor 1's, and so on.  Model inputs and outputs use this
    layout, so contiguous output blocks map back to sensors.
    """

    matrix: np.ndarray
    event_index: int

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ValueError(f"slice matrix must be 2-d, got shape {self.matrix.shape}")

    @property
    def flat(self) -> np.ndarray:
        return self.matrix.reshape(-1)

    @property
    def n_sensors(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]


@dataclass
class PreprocessConfig:
    """Signal-to-feature settings.

    keep_bins        number of DFT magnitude bins kept per sensor (DC included)
    pair_difference  subtract adjacent-sensor signals before the transform,
                     halving the sensor axis (requires an even sensor count)
    """

    keep_bins: int
    pair_difference: bool = False

    def __post_init__(self):
        if int(self.keep_bins) != self.keep_bins or self.keep_bins < 1:
            raise ValueError(f"keep_bins must be a positive integer, got {self.keep_bins}")
        self.keep_bins = int(self.keep_bins)


def normalize_signal(raw: np.ndarray) -> np.ndarray:
    """Scale a signal to zero mean and unit (population) standard deviation.

    A constant signal has zero variance; it maps to the all-zero vector
    rather than dividing by zero.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("cannot normalize an empty signal")
    if not np.all(np.isfinite(raw)):
        raise ValueError("signal contains non-finite entries")
    centered = raw - raw.mean()
    std = centered.std()
    if std == 0.0:
        return np.zeros_like(raw)
    return centered / std


def fft_features(signal: np.ndarray, keep_bins: int) -> np.ndarray:
    """First ``keep_bins`` magnitudes of the signal's discrete Fourier transform.

    Uses the unnormalised forward transform; bin 0 is the DC magnitude.
    The signal must be at least twice as long as ``keep_bins`` so that the
    kept bins all lie in the non-redundant half spectrum.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if keep_bins < 1:
        raise ValueError(f"keep_bins must be >= 1, got {keep_bins}")
    if signal.size < 2 * keep_bins:
        raise ValueError(
            f"keep_bins={keep_bins} needs a signal of length >= {2 * keep_bins}, "
            f"got {signal.size}"
        )
    spectrum = np.fft.fft(signal)
    return np.abs(spectrum[:keep_bins])


def _pair_difference(event: np.ndarray, labels: list[str]) -> tuple[np.ndarray, list[str]]:
    n = event.shape[0]
    if n % 2 != 0:
        raise ValueError(f"pair_difference requires an even sensor count, got {n}")
    diff = event[0::2] - event[1::2]
    merged = [f"{labels[i]}-{labels[i + 1]}" for i in range(0, n, 2)]
    return diff, merged


def build_tensor(
    events: Sequence[np.ndarray] | np.ndarray,
    cfg: PreprocessConfig,
    sensor_labels: Sequence[str] | None = None,
) -> MultiwayTensor:
    """Preprocess raw per-event signals into a feature tensor.

    Parameters
    ----------
    events : sequence of (n_sensors, signal_length) arrays, or one
        (n_events, n_sensors, signal_length) array.  Every event must carry
        the same sensor count and signal length.
    cfg : preprocessing settings.
    sensor_labels : optional labels; defaults to ``s0 .. s{n-1}``.

    Each signal is normalised to zero mean / unit variance, optionally
    differenced against its pair neighbour, and reduced to ``keep_bins``
    spectral magnitudes.  Output dims are (n_rows, keep_bins, n_events)
    where n_rows is the sensor count, halved under pair differencing.
    """
    mats = [np.asarray(e, dtype=np.float64) for e in events]
    if len(mats) == 0:
        raise ValueError("event list is empty")
    shape0 = mats[0].shape
    if len(shape0) != 2:
        raise ValueError(f"each event must be a 2-d (sensor, sample) array, got {shape0}")
    for i, m in enumerate(mats):
        if m.shape != shape0:
            raise ValueError(
                f"ragged input: event 0 has shape {shape0} but event {i} has {m.shape}"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError(f"event {i} contains non-finite samples")

    n_raw = shape0[0]
    if sensor_labels is None:
        labels = [f"s{i}" for i in range(n_raw)]
    else:
        labels = [str(s) for s in sensor_labels]
        if len(labels) != n_raw:
            raise ValueError(f"expected {n_raw} sensor labels, got {len(labels)}")

    per_event = []
    out_labels = labels
    for mat in mats:
        normed = np.stack([normalize_signal(row) for row in mat])
        if cfg.pair_difference:
            normed, out_labels = _pair_difference(normed, labels)
        feats = np.stack([fft_features(row, cfg.keep_bins) for row in normed])
        per_event.append(feats)

    values = np.stack(per_event, axis=2)  # (n_rows, keep_bins, n_events)
    return MultiwayTensor(values=values, sensor_labels=out_labels)


def frontal_slice(tensor: MultiwayTensor, idx: int) -> EventSlice:
    """The (n_sensors, n_features) matrix of event ``idx``."""
    if not (0 <= idx < tensor.n_events):
        raise IndexError(
            f"event index {idx} out of range for tensor with {tensor.n_events} events"
        )
    return EventSlice(matrix=tensor.values[:, :, idx].copy(), event_index=idx)


def all_slices(tensor: MultiwayTensor) -> list[EventSlice]:
    return [frontal_slice(tensor, i) for i in range(tensor.n_events)]


def split_events(
    tensor: MultiwayTensor, train_fraction: float, seed: int
) -> tuple[MultiwayTensor, MultiwayTensor]:
    """Random disjoint train/test partition along the event axis.

    Deterministic for a given seed.  The train side gets
    ``floor(train_fraction * n_events)`` events; event order within each
    side follows the original tensor.
    """
    if not (0.0 < train_fraction < 1.0):
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    t = tensor.n_events
    n_train = int(np.floor(train_fraction * t))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(t)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = MultiwayTensor(tensor.values[:, :, train_idx], list(tensor.sensor_labels))
    test = MultiwayTensor(tensor.values[:, :, test_idx], list(tensor.sensor_labels))
    return train, test


@dataclass
class FeatureScaler:
    """Per-(sensor, feature) standardisation fitted on training events.

    Columns with zero spread are centered but not scaled.  The fitted
    statistics travel with the model so test data is mapped into the same
    coordinates the model was trained in.
    """

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, tensor: MultiwayTensor) -> "FeatureScaler":
        mean = tensor.values.mean(axis=2)
        std = tensor.values.std(axis=2)
        scale = np.where(std > 1e-12, std, 1.0)
        return cls(mean=mean, scale=scale)

    def transform(self, tensor: MultiwayTensor) -> MultiwayTensor:
        if tensor.values.shape[:2] != self.mean.shape:
            raise ValueError(
                f"scaler fitted on (sensors, features)={self.mean.shape} cannot "
                f"transform data with {tensor.values.shape[:2]}"
            )
        values = (tensor.values - self.mean[:, :, None]) / self.scale[:, :, None]
        return MultiwayTensor(values=values, sensor_labels=list(tensor.sensor_labels))
