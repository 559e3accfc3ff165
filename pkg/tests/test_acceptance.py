"""Acceptance gates for the full pipeline.

Each test prints one PASS/FAIL line (run with ``pytest -v -s`` to see them
live).  The trained-model criteria share one module-scoped training run on
the standard benchmark (8 sensors x 128 bins x 200 healthy events).
"""

import json
import time
from dataclasses import replace

import numpy as np
import pytest

from multiway_vae.cli import main as cli_main
from multiway_vae.config import default_config
from multiway_vae.multiway import fft_features
from multiway_vae.network import backprop, forward, init_params, mse_cost
from multiway_vae.pipeline import score_model, train_model
from multiway_vae.synthetic import DamageSpec, benchmark_suite, generate
from multiway_vae.vae import (
    LatentDistribution,
    OutputDistribution,
    elbo_gradients,
    elbo_loss,
    gaussian_log_likelihood,
    kl_to_standard_normal,
    param_arrays,
)

from helpers import naive_dft_magnitudes, network_arrays, random_vae
from test_cli import QUICK_CONFIG


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def bench():
    """One standard-benchmark training run shared by criteria 4-7."""
    cfg = default_config()
    defs = [(s.name, s.n_events, s.injections) for s in cfg.scenarios]
    suite = benchmark_suite(cfg.synth.seed, spec=cfg.synth, scenario_defs=defs)
    start = time.perf_counter()
    artifact, curve = train_model(suite.train.signals, None, cfg)
    train_seconds = time.perf_counter() - start
    return cfg, suite, artifact, curve, train_seconds


def _fd_max_rel_error(arrays, grads, loss_fn, step=1e-5):
    worst = 0.0
    for arr, grad in zip(arrays, grads):
        flat, gflat = arr.reshape(-1), np.asarray(grad).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = loss_fn()
            flat[i] = orig - step
            lm = loss_fn()
            flat[i] = orig
            fd = (lp - lm) / (2 * step)
            worst = max(worst, abs(fd - gflat[i]) / max(abs(fd), abs(gflat[i]), 1e-6))
    return worst


def test_criterion_1_gradient_correctness():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    worst = 0.0

    # 10 plain autoencoders, the first at the maximum widths
    ae_shapes = [[32, 16, 8, 16, 32]] + [
        [int(rng.integers(4, 17)), int(rng.integers(3, 9)), int(rng.integers(2, 5))]
        for _ in range(9)
    ]
    for spec in ae_shapes:
        if len(spec) == 3:
            d, h1, h2 = spec
            topology = [d, h1, h2, h1, d]
        else:
            topology = spec
        params = init_params(topology, "tanh", None, rng)
        x = rng.normal(0, 1, topology[0])

        def ae_loss():
            return mse_cost([(x, forward(params, x).output)])

        grads = backprop(params, forward(params, x), x)
        worst = max(
            worst, _fd_max_rel_error(network_arrays(params), network_arrays(grads), ae_loss)
        )

    # 10 variational autoencoders, the first at the maximum widths
    vae_shapes = [(32, (16, 8), 4)] + [
        (int(rng.integers(4, 13)), (int(rng.integers(3, 9)),), int(rng.integers(2, 4)))
        for _ in range(9)
    ]
    for d_in, hidden, d_z in vae_shapes:
        params = random_vae(d_in=d_in, d_z=d_z, hidden=hidden, seed=int(rng.integers(1 << 30)))
        x = rng.normal(0, 1, d_in)
        eps = rng.standard_normal((2, d_z))
        _, grads = elbo_gradients(params, x, eps)
        worst = max(
            worst,
            _fd_max_rel_error(
                param_arrays(params), grads, lambda: elbo_loss(params, x, eps)
            ),
        )

    elapsed = time.perf_counter() - start
    report(
        "criterion 1 (gradient correctness)",
        worst < 1e-4 and elapsed < 10.0,
        f"20 networks, max rel error {worst:.2e} (limit 1e-4), {elapsed:.1f}s (limit 10s)",
    )


def test_criterion_2_kl_oracle():
    exact_zero = kl_to_standard_normal(
        LatentDistribution(mu=np.zeros(3), sigma=np.ones(3))
    )
    rng = np.random.default_rng(2002)
    worst = 0.0
    for trial in range(50):
        d = int(rng.integers(1, 3))
        mu = rng.uniform(-2, 2, d)
        sigma = rng.uniform(0.5, 2.0, d)
        closed = kl_to_standard_normal(LatentDistribution(mu=mu, sigma=sigma))
        # 10^6 evaluations as 500k antithetic pairs (eps, -eps)
        eps = rng.standard_normal((500_000, d))
        eps = np.concatenate([eps, -eps])
        z = mu + sigma * eps
        ln_q = np.sum(
            -0.5 * np.log(2 * np.pi) - np.log(sigma) - (z - mu) ** 2 / (2 * sigma**2),
            axis=1,
        )
        ln_p = np.sum(-0.5 * np.log(2 * np.pi) - z**2 / 2, axis=1)
        worst = max(worst, abs(closed - float(np.mean(ln_q - ln_p))))
    report(
        "criterion 2 (KL oracle)",
        worst < 1e-2 and abs(exact_zero) < 1e-12,
        f"50 Gaussians, max |closed - MC| = {worst:.2e} (limit 1e-2); "
        f"KL(N01||N01) = {exact_zero:.1e} (limit 1e-12)",
    )


def test_criterion_3_likelihood_anchor():
    value = gaussian_log_likelihood(
        np.zeros(1), OutputDistribution(mu=np.zeros(1), sigma=np.ones(1))
    )
    report(
        "criterion 3 (likelihood anchor)",
        abs(value - (-0.918939)) < 1e-6,
        f"log N(0|0,1) = {value:.7f} (want -0.918939 +- 1e-6)",
    )


def test_criterion_4_training_descent(bench):
    _, _, _, curve, train_seconds = bench
    first = float(np.mean(curve[:10]))
    last = float(np.mean(curve[-10:]))
    report(
        "criterion 4 (training descent)",
        last < first and train_seconds < 60.0,
        f"mean loss first 10 epochs {first:.1f} -> last 10 epochs {last:.1f}; "
        f"trained in {train_seconds:.1f}s (limit 60s)",
    )


def test_criterion_5_detection(bench):
    _, suite, artifact, _, _ = bench
    scen = {s.name: s for s in suite.scenarios}
    healthy = scen["healthy"].dataset

    res_h = score_model(artifact, healthy.signals)
    fpr = res_h.n_flagged / healthy.n_events

    f_scores = {}
    for name in ("damage_015", "damage_040"):
        damage = scen[name].dataset
        signals = np.concatenate([healthy.signals, damage.signals])
        truth = [False] * healthy.n_events + [True] * damage.n_events
        result = score_model(artifact, signals, None, None, truth)
        f_scores[name] = result.metrics[2]

    ok = f_scores["damage_040"] >= 0.95 and f_scores["damage_015"] >= 0.85 and fpr <= 0.05
    report(
        "criterion 5 (detection)",
        ok,
        f"F@0.40 = {f_scores['damage_040']:.3f} (>= 0.95), "
        f"F@0.15 = {f_scores['damage_015']:.3f} (>= 0.85), "
        f"healthy FPR = {fpr:.3f} (<= 0.05)",
    )


def test_criterion_6_severity_monotonicity(bench):
    cfg, _, artifact, _, _ = bench
    monotone = 0
    reps = 20
    for rep in range(reps):
        means = []
        for gi, magnitude in enumerate((0.0, 0.15, 0.4)):
            spec = replace(
                cfg.synth, n_events=40, seed=cfg.synth.seed + 100_000 + rep * 100 + gi
            )
            damage = (
                DamageSpec(target_sensors=[5], magnitude=magnitude, n_events=40)
                if magnitude > 0
                else None
            )
            data = generate(spec, damage)
            result = score_model(artifact, data.signals)
            means.append(
                float(np.mean([e.score.neg_log_likelihood for e in result.events]))
            )
        monotone += means[0] < means[1] < means[2]
    report(
        "criterion 6 (severity monotonicity)",
        monotone >= int(np.ceil(0.95 * reps)),
        f"group means strictly increasing in {monotone}/{reps} repetitions (need >= 19)",
    )


def test_criterion_7_localization(bench):
    _, suite, artifact, _, _ = bench
    scen = {s.name: s for s in suite.scenarios}

    single = scen["damage_040"]
    target = {f"s{i}" for inj in single.injections for i in inj.target_sensors}
    res = score_model(artifact, single.dataset.signals)
    rank1 = np.mean(
        [
            any(s.rank == 1 and s.sensor_label in target for s in e.location_scores)
            for e in res.events
        ]
    )

    two = scen["damage_two_site"]
    sites = {f"s{i}" for inj in two.injections for i in inj.target_sensors}
    res2 = score_model(artifact, two.dataset.signals)
    top2 = np.mean(
        [
            sites <= {s.sensor_label for s in e.location_scores if s.rank <= 2}
            for e in res2.events
        ]
    )
    report(
        "criterion 7 (localization)",
        rank1 >= 0.90 and top2 >= 0.80,
        f"single-site rank-1 rate {rank1:.2f} (>= 0.90); "
        f"two-site top-2 rate {top2:.2f} (>= 0.80)",
    )


def test_criterion_8_determinism(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(QUICK_CONFIG))

    outputs = {}
    for run in ("a", "b"):
        base = tmp_path / run
        data, model, report_dir = base / "data", base / "model.mva", base / "report"
        assert cli_main(["synth", "--config", str(config_path), "--out", str(data)]) == 0
        assert cli_main([
            "train", "--data", str(data / "train.mwt"),
            "--config", str(config_path), "--out", str(model),
        ]) == 0
        assert cli_main([
            "score", "--model", str(model), "--data", str(data / "test.mwt"),
            "--labels", str(data / "test_labels.csv"), "--out", str(report_dir),
        ]) == 0
        outputs[run] = {
            "train.mwt": data / "train.mwt",
            "test.mwt": data / "test.mwt",
            "train_labels.csv": data / "train_labels.csv",
            "test_labels.csv": data / "test_labels.csv",
            "model.mva": model,
            "model_loss.csv": base / "model_loss.csv",
            "report.csv": report_dir / "report.csv",
            "severity.csv": report_dir / "severity.csv",
            "localization.csv": report_dir / "localization.csv",
            "localization_events.csv": report_dir / "localization_events.csv",
            "summary.csv": report_dir / "summary.csv",
            "scores.png": report_dir / "scores.png",
            "localization.png": report_dir / "localization.png",
        }

    mismatched = [
        name
        for name in outputs["a"]
        if outputs["a"][name].read_bytes() != outputs["b"][name].read_bytes()
    ]
    report(
        "criterion 8 (determinism)",
        not mismatched,
        "two synth->train->score runs byte-identical across "
        f"{len(outputs['a'])} files" + (f"; mismatches: {mismatched}" if mismatched else ""),
    )


def test_criterion_9_fft_oracle():
    rng = np.random.default_rng(9009)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(8, 257))
        signal = rng.normal(0, 1, n)
        keep = int(rng.integers(1, n // 2 + 1))
        got = fft_features(signal, keep)
        want = naive_dft_magnitudes(signal, keep)
        scale = max(want.max(), 1.0)
        worst = max(worst, float(np.max(np.abs(got - want))) / scale)
    report(
        "criterion 9 (FFT oracle)",
        worst < 1e-9,
        f"100 signals <= 256 samples, max scaled deviation {worst:.2e} (limit 1e-9)",
    )
