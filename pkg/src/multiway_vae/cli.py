"""Command-line front end.

    mva synth    --out DIR [--config FILE] [--seed N]
    mva train    --data PATH --out MODEL [--config FILE] [--seed N]
    mva score    --model MODEL --data PATH --out DIR [--labels FILE]
    mva evaluate --report FILE --labels FILE [--out DIR]
    mva example-config [--out FILE]

Data paths accept the packed binary tensor format (.mwt) or a directory
of per-event CSV files.  Exit codes: 0 success, 2 validation problem,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import reporting
from .artifact import ArtifactFormatError, load_artifact, save_artifact
from .config import ConfigError, default_config, load_config, write_config
from .dataio import (
    EventLabel,
    read_event_dir,
    read_labels_csv,
    read_tensor,
    write_labels_csv,
    write_tensor,
)
from .detection import DAMAGE, evaluate_decisions
from .multiway import MultiwayTensor
from .pipeline import score_model, train_model
from .synthetic import benchmark_suite

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _load_raw_events(path: Path) -> tuple[np.ndarray, list[str]]:
    """Raw signals as (n_events, n_sensors, signal_length) plus labels."""
    if not path.exists():
        raise ConfigError(f"data path not found: {path}")
    if path.is_dir():
        return read_event_dir(path)
    tensor = read_tensor(path)
    return np.asarray(tensor.event_matrices()), list(tensor.sensor_labels)


def cmd_synth(args) -> int:
    cfg = load_config(args.config, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    scenario_defs = [(s.name, s.n_events, s.injections) for s in cfg.scenarios] or None
    suite = benchmark_suite(cfg.synth.seed, spec=cfg.synth, scenario_defs=scenario_defs)

    def as_tensor(signals: np.ndarray) -> MultiwayTensor:
        labels = [f"s{i}" for i in range(signals.shape[1])]
        return MultiwayTensor(values=np.transpose(signals, (1, 2, 0)), sensor_labels=labels)

    write_tensor(out_dir / "train.mwt", as_tensor(suite.train.signals))
    write_labels_csv(out_dir / "train_labels.csv", suite.train.labels)

    test_signals = np.concatenate([s.dataset.signals for s in suite.scenarios], axis=0)
    test_labels: list[EventLabel] = []
    for scen in suite.scenarios:
        for lab in scen.dataset.labels:
            test_labels.append(
                EventLabel(
                    event_index=len(test_labels),
                    group=lab.group,
                    is_damage=lab.is_damage,
                    target_sensors=lab.target_sensors,
                )
            )
    write_tensor(out_dir / "test.mwt", as_tensor(test_signals))
    write_labels_csv(out_dir / "test_labels.csv", test_labels)
    write_config(out_dir / "config.json", cfg)

    print(f"wrote {suite.train.n_events} training events and "
          f"{len(test_labels)} test events across {len(suite.scenarios)} scenarios to {out_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_config(args.config, args.seed)
    raw_events, sensor_labels = _load_raw_events(Path(args.data))

    artifact, curve = train_model(
        raw_events,
        sensor_labels,
        cfg,
        on_epoch=lambda epoch, loss: print(f"epoch {epoch:4d}  loss {loss:.6f}"),
    )

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_artifact(out, artifact)
    stem = out.parent / out.stem
    reporting.write_loss_curve_csv(Path(f"{stem}_loss.csv"), curve)
    reporting.render_loss_figure(Path(f"{stem}_loss.png"), curve)
    print(f"model -> {out}  (threshold {artifact.threshold:.4f})")
    return EXIT_OK


def cmd_score(args) -> int:
    artifact = load_artifact(Path(args.model))
    raw_events, sensor_labels = _load_raw_events(Path(args.data))

    groups = None
    truth = None
    if args.labels is not None:
        labels = read_labels_csv(Path(args.labels))
        if len(labels) != raw_events.shape[0]:
            raise ConfigError(
                f"labels file has {len(labels)} rows but data has "
                f"{raw_events.shape[0]} events"
            )
        groups = [lab.group for lab in labels]
        truth = [lab.is_damage for lab in labels]

    result = score_model(artifact, raw_events, sensor_labels, groups, truth)
    paths = reporting.write_score_report(Path(args.out), result)

    print(f"{len(result.events)} events scored, {result.n_flagged} flagged as {DAMAGE}")
    if result.metrics is not None:
        precision, recall, f_score = result.metrics
        print(f"precision {precision:.4f}  recall {recall:.4f}  f_score {f_score:.4f}")
    print(f"report -> {paths['report'].parent}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    report_path = Path(args.report)
    if not report_path.exists():
        raise ConfigError(f"report file not found: {report_path}")
    with report_path.open(newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "decision" not in reader.fieldnames:
            raise ConfigError(f"{report_path}: not a score report (no decision column)")
        decisions = [row["decision"] == DAMAGE for row in reader]
    if not decisions:
        raise ConfigError(f"{report_path}: report has no events")

    labels = read_labels_csv(Path(args.labels))
    if len(labels) != len(decisions):
        raise ConfigError(
            f"report has {len(decisions)} events but labels file has {len(labels)}"
        )
    truth = [lab.is_damage for lab in labels]
    precision, recall, f_score = evaluate_decisions(decisions, truth)
    print(f"precision {precision:.4f}  recall {recall:.4f}  f_score {f_score:.4f}")

    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with (out_dir / "metrics.csv").open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["key", "value"])
            writer.writerow(["precision", repr(precision)])
            writer.writerow(["recall", repr(recall)])
            writer.writerow(["f_score", repr(f_score)])
    return EXIT_OK


def cmd_example_config(args) -> int:
    from .config import config_to_dict

    cfg = default_config()
    if args.out is None:
        print(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
    else:
        write_config(args.out, cfg)
        print(f"wrote default config to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mva",
        description="Multiway VAE anomaly detector: synthesize benchmark data, "
        "train, score, and evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate benchmark datasets with ground truth")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on healthy data")
    p.add_argument("--data", required=True, help="raw tensor (.mwt) or event CSV directory")
    p.add_argument("--config", help="run config JSON")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score new data against a trained model")
    p.add_argument("--model", required=True, help="trained model file")
    p.add_argument("--data", required=True, help="raw tensor (.mwt) or event CSV directory")
    p.add_argument("--labels", help="optional labels CSV for groups and metrics")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="compute precision/recall/F from a report")
    p.add_argument("--report", required=True, help="report.csv from `mva score`")
    p.add_argument("--labels", required=True, help="ground-truth labels CSV")
    p.add_argument("--out", help="optional directory for metrics.csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("example-config", help="write the default run config")
    p.add_argument("--out", help="file to write (default: stdout)")
    p.set_defaults(func=cmd_example_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ArtifactFormatError, ValueError, IndexError, KeyError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
