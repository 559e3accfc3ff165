"""Single-file model container.

Layout (all integers little endian):

    magic "MVAM"
    u32 format_version
    u32 section_count
    per section:  u16 name length, name (UTF-8),
                  u64 payload length, payload
    u32 CRC32 over everything above

Each payload is a bundle: u32 JSON header length, canonical JSON (scalar
fields plus ordered array descriptors), then the arrays as raw little
endian float64.  Writing is canonical, so save(load(path)) reproduces the
file byte for byte.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detection import DetectionConfig
from .localization import LocalizationConfig, SensorIdentityBaseline
from .multiway import FeatureScaler, PreprocessConfig
from .vae import VaeParams

ARTIFACT_MAGIC = b"MVAM"
FORMAT_VERSION = 1


class ArtifactFormatError(ValueError):
    """Raised when a model file cannot be read as the expected format."""


@dataclass
class ModelArtifact:
    """Everything needed to score new data exactly as at training time."""

    preprocess: PreprocessConfig
    scaler: FeatureScaler
    sensor_labels: list[str]
    vae: VaeParams
    threshold: float
    baseline: SensorIdentityBaseline
    detection: DetectionConfig
    localization: LocalizationConfig
    seed: int
    run_config: dict
    format_version: int = FORMAT_VERSION


def _dumps(meta: dict) -> bytes:
    return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _pack_bundle(meta: dict, arrays: list[tuple[str, np.ndarray]]) -> bytes:
    header = _dumps(
        {
            "meta": meta,
            "arrays": [{"name": name, "shape": list(a.shape)} for name, a in arrays],
        }
    )
    parts = [struct.pack("<I", len(header)), header]
    for _, a in arrays:
        parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return b"".join(parts)


def _unpack_bundle(payload: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if len(payload) < 4:
        raise ArtifactFormatError("section payload truncated")
    (hlen,) = struct.unpack("<I", payload[:4])
    header = json.loads(payload[4 : 4 + hlen].decode("utf-8"))
    offset = 4 + hlen
    arrays: dict[str, np.ndarray] = {}
    for desc in header["arrays"]:
        shape = tuple(desc["shape"])
        nbytes = int(np.prod(shape)) * 8 if shape else 8
        raw = payload[offset : offset + nbytes]
        if len(raw) != nbytes:
            raise ArtifactFormatError(f"array {desc['name']!r} truncated")
        arrays[desc["name"]] = (
            np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
        )
        offset += nbytes
    return header["meta"], arrays


def _vae_bundle(vae: VaeParams) -> bytes:
    arrays: list[tuple[str, np.ndarray]] = []
    for l, (w, b) in enumerate(zip(vae.enc_weights, vae.enc_biases)):
        arrays += [(f"enc_w{l}", w), (f"enc_b{l}", b)]
    arrays += [
        ("enc_mu_w", vae.enc_mu_w),
        ("enc_mu_b", vae.enc_mu_b),
        ("enc_lv_w", vae.enc_logvar_w),
        ("enc_lv_b", vae.enc_logvar_b),
    ]
    for l, (w, b) in enumerate(zip(vae.dec_weights, vae.dec_biases)):
        arrays += [(f"dec_w{l}", w), (f"dec_b{l}", b)]
    arrays += [
        ("dec_mu_w", vae.dec_mu_w),
        ("dec_mu_b", vae.dec_mu_b),
        ("dec_lv_w", vae.dec_logvar_w),
        ("dec_lv_b", vae.dec_logvar_b),
    ]
    meta = {
        "hidden_activation": vae.hidden_activation,
        "n_enc_layers": len(vae.enc_weights),
        "n_dec_layers": len(vae.dec_weights),
    }
    return _pack_bundle(meta, arrays)


def _vae_from_bundle(meta: dict, arrays: dict[str, np.ndarray]) -> VaeParams:
    n_enc, n_dec = meta["n_enc_layers"], meta["n_dec_layers"]
    return VaeParams(
        enc_weights=[arrays[f"enc_w{l}"] for l in range(n_enc)],
        enc_biases=[arrays[f"enc_b{l}"] for l in range(n_enc)],
        enc_mu_w=arrays["enc_mu_w"],
        enc_mu_b=arrays["enc_mu_b"],
        enc_logvar_w=arrays["enc_lv_w"],
        enc_logvar_b=arrays["enc_lv_b"],
        dec_weights=[arrays[f"dec_w{l}"] for l in range(n_dec)],
        dec_biases=[arrays[f"dec_b{l}"] for l in range(n_dec)],
        dec_mu_w=arrays["dec_mu_w"],
        dec_mu_b=arrays["dec_mu_b"],
        dec_logvar_w=arrays["dec_lv_w"],
        dec_logvar_b=arrays["dec_lv_b"],
        hidden_activation=meta["hidden_activation"],
    )


def save_artifact(path: str | Path, artifact: ModelArtifact) -> None:
    sections: list[tuple[str, bytes]] = [
        (
            "meta",
            _pack_bundle(
                {
                    "seed": artifact.seed,
                    "run_config": artifact.run_config,
                    "detection": {
                        "mc_samples": artifact.detection.mc_samples,
                        "threshold_quantile": artifact.detection.threshold_quantile,
                        "seed": artifact.detection.seed,
                    },
                    "localization": {
                        "k": artifact.localization.k,
                        "per_feature": artifact.localization.per_feature,
                        "mc_samples": artifact.localization.mc_samples,
                        "seed": artifact.localization.seed,
                    },
                },
                [],
            ),
        ),
        (
            "preprocess",
            _pack_bundle(
                {
                    "keep_bins": artifact.preprocess.keep_bins,
                    "pair_difference": artifact.preprocess.pair_difference,
                    "sensor_labels": artifact.sensor_labels,
                },
                [("scaler_mean", artifact.scaler.mean), ("scaler_scale", artifact.scaler.scale)],
            ),
        ),
        ("vae", _vae_bundle(artifact.vae)),
        ("threshold", _pack_bundle({"threshold": artifact.threshold}, [])),
        (
            "baseline",
            _pack_bundle(
                {"sensor_labels": artifact.baseline.sensor_labels},
                [
                    ("history", artifact.baseline.history),
                    ("summary", artifact.baseline.summary),
                ],
            ),
        ),
    ]

    body = [ARTIFACT_MAGIC, struct.pack("<II", artifact.format_version, len(sections))]
    for name, payload in sections:
        encoded = name.encode("utf-8")
        body.append(struct.pack("<H", len(encoded)))
        body.append(encoded)
        body.append(struct.pack("<Q", len(payload)))
        body.append(payload)
    blob = b"".join(body)
    blob += struct.pack("<I", zlib.crc32(blob))
    Path(path).write_bytes(blob)


def load_artifact(path: str | Path) -> ModelArtifact:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 16 or blob[:4] != ARTIFACT_MAGIC:
        raise ArtifactFormatError(f"{path}: not a model file (bad magic)")
    (stored_crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(blob[:-4]) != stored_crc:
        raise ArtifactFormatError(f"{path}: checksum mismatch, file is corrupt")
    version, n_sections = struct.unpack("<II", blob[4:12])
    if version != FORMAT_VERSION:
        raise ArtifactFormatError(
            f"{path}: format version {version} not supported (expected {FORMAT_VERSION})"
        )
    offset = 12
    sections: dict[str, bytes] = {}
    for _ in range(n_sections):
        (name_len,) = struct.unpack("<H", blob[offset : offset + 2])
        offset += 2
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (plen,) = struct.unpack("<Q", blob[offset : offset + 8])
        offset += 8
        sections[name] = blob[offset : offset + plen]
        offset += plen

    missing = {"meta", "preprocess", "vae", "threshold", "baseline"} - set(sections)
    if missing:
        raise ArtifactFormatError(f"{path}: missing sections {sorted(missing)}")

    meta, _ = _unpack_bundle(sections["meta"])
    pre_meta, pre_arrays = _unpack_bundle(sections["preprocess"])
    vae_meta, vae_arrays = _unpack_bundle(sections["vae"])
    thr_meta, _ = _unpack_bundle(sections["threshold"])
    base_meta, base_arrays = _unpack_bundle(sections["baseline"])

    baseline = SensorIdentityBaseline(
        history=base_arrays["history"],
        summary=base_arrays["summary"],
        sensor_labels=list(base_meta["sensor_labels"]),
    )
    return ModelArtifact(
        preprocess=PreprocessConfig(
            keep_bins=pre_meta["keep_bins"],
            pair_difference=pre_meta["pair_difference"],
        ),
        scaler=FeatureScaler(
            mean=pre_arrays["scaler_mean"], scale=pre_arrays["scaler_scale"]
        ),
        sensor_labels=list(pre_meta["sensor_labels"]),
        vae=_vae_from_bundle(vae_meta, vae_arrays),
        threshold=float(thr_meta["threshold"]),
        baseline=baseline,
        detection=DetectionConfig(**meta["detection"]),
        localization=LocalizationConfig(**meta["localization"]),
        seed=int(meta["seed"]),
        run_config=meta["run_config"],
        format_version=version,
    )
