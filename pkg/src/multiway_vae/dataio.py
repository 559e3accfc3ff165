"""File formats for raw and preprocessed multiway data.

Binary tensor (.mwt):
    magic "MWT1"
    u32 n_sensors, u32 n_features, u32 n_events   (little endian)
    n*m*t float64 values in [sensor][feature][event] order
    one sensor label per line, newline terminated, UTF-8

Event CSV: header row of sensor labels, one row per time sample, one
column per sensor.  Label CSV: event_index, group, is_damage,
target_sensors (semicolon separated indices).
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .multiway import MultiwayTensor

TENSOR_MAGIC = b"MWT1"


def write_tensor(path: str | Path, tensor: MultiwayTensor) -> None:
    path = Path(path)
    with path.open("wb") as f:
        f.write(TENSOR_MAGIC)
        n, m, t = tensor.values.shape
        f.write(struct.pack("<III", n, m, t))
        f.write(np.ascontiguousarray(tensor.values, dtype="<f8").tobytes())
        for label in tensor.sensor_labels:
            f.write(label.encode("utf-8") + b"\n")


def read_tensor(path: str | Path) -> MultiwayTensor:
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != TENSOR_MAGIC:
        raise ValueError(f"{path}: not a tensor file (bad magic {blob[:4]!r})")
    n, m, t = struct.unpack("<III", blob[4:16])
    n_bytes = n * m * t * 8
    if len(blob) < 16 + n_bytes:
        raise ValueError(f"{path}: truncated tensor file")
    values = np.frombuffer(blob[16 : 16 + n_bytes], dtype="<f8").reshape(n, m, t)
    labels = blob[16 + n_bytes :].decode("utf-8").splitlines()
    if len(labels) != n:
        raise ValueError(f"{path}: expected {n} sensor labels, found {len(labels)}")
    return MultiwayTensor(values=values.astype(np.float64), sensor_labels=labels)


def write_event_csv(path: str | Path, signals: np.ndarray, sensor_labels: list[str]) -> None:
    """One event's raw signals: columns are sensors, rows are time samples."""
    signals = np.asarray(signals, dtype=np.float64)
    if signals.ndim != 2 or signals.shape[0] != len(sensor_labels):
        raise ValueError(
            f"expected (n_sensors={len(sensor_labels)}, samples) signals, got {signals.shape}"
        )
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(sensor_labels)
        for row in signals.T:
            writer.writerow([repr(float(v)) for v in row])


def read_event_csv(path: str | Path) -> tuple[np.ndarray, list[str]]:
    """Returns ((n_sensors, samples) signals, sensor labels)."""
    path = Path(path)
    with path.open(newline="") as f:
        reader = csv.reader(f)
        try:
            labels = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty event file") from None
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(labels):
                raise ValueError(
                    f"{path}:{line_no}: expected {len(labels)} columns, got {len(row)}"
                )
            rows.append([float(v) for v in row])
    if not rows:
        raise ValueError(f"{path}: no samples")
    return np.asarray(rows, dtype=np.float64).T, [s.strip() for s in labels]


def read_event_dir(path: str | Path) -> tuple[np.ndarray, list[str]]:
    """Load a directory of event CSVs (sorted by filename) into a
    (n_events, n_sensors, samples) array."""
    path = Path(path)
    files = sorted(p for p in path.iterdir() if p.suffix == ".csv")
    if not files:
        raise ValueError(f"{path}: no .csv event files found")
    events = []
    labels = None
    for p in files:
        signals, file_labels = read_event_csv(p)
        if labels is None:
            labels = file_labels
        elif file_labels != labels:
            raise ValueError(f"{p}: sensor labels differ from {files[0]}")
        events.append(signals)
    try:
        stacked = np.stack(events)
    except ValueError:
        raise ValueError(f"{path}: event files have inconsistent shapes") from None
    return stacked, labels


@dataclass
class EventLabel:
    event_index: int
    group: str
    is_damage: bool
    target_sensors: list[int]


def write_labels_csv(path: str | Path, labels: list[EventLabel]) -> None:
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["event_index", "group", "is_damage", "target_sensors"])
        for lab in labels:
            writer.writerow(
                [
                    lab.event_index,
                    lab.group,
                    int(lab.is_damage),
                    ";".join(str(i) for i in lab.target_sensors),
                ]
            )


def read_labels_csv(path: str | Path) -> list[EventLabel]:
    path = Path(path)
    out = []
    with path.open(newline="") as f:
        reader = csv.DictReader(f)
        required = {"event_index", "group", "is_damage", "target_sensors"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(
                f"{path}: labels file must have columns {sorted(required)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            targets = [int(v) for v in row["target_sensors"].split(";") if v != ""]
            out.append(
                EventLabel(
                    event_index=int(row["event_index"]),
                    group=row["group"],
                    is_damage=bool(int(row["is_damage"])),
                    target_sensors=targets,
                )
            )
    if not out:
        raise ValueError(f"{path}: labels file has no rows")
    return out
