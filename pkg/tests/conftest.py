import pytest

from multiway_vae.config import RunConfig, ScenarioDef
from multiway_vae.detection import DetectionConfig
from multiway_vae.localization import LocalizationConfig
from multiway_vae.multiway import PreprocessConfig
from multiway_vae.pipeline import train_model
from multiway_vae.synthetic import SyntheticSpec, benchmark_suite
from multiway_vae.vae import VaeTrainConfig


def small_run_config(seed: int = 11) -> RunConfig:
    """Desk-scale config for integration tests: trains in a few seconds."""
    return RunConfig(
        seed=seed,
        preprocess=PreprocessConfig(keep_bins=32),
        vae=VaeTrainConfig(
            learning_rate=2e-3,
            epochs=8,
            mc_samples=3,
            latent_dim=4,
            encoder_hidden=(32, 16),
            seed=seed + 1,
        ),
        detection=DetectionConfig(mc_samples=5, threshold_quantile=0.03, seed=seed + 2),
        localization=LocalizationConfig(k=3, per_feature=True, mc_samples=5, seed=seed + 3),
        synth=SyntheticSpec(
            n_sensors=4,
            signal_length=64,
            n_events=80,
            base_modes=((5.0, 1.0), (13.0, 0.7)),
            noise_std=0.1,
            seed=seed,
        ),
        scenarios=[
            ScenarioDef("healthy", 30, []),
            ScenarioDef("hit", 20, [([2], 0.4)]),
            ScenarioDef("two_site", 16, [([0], 0.5), ([3], 0.25)]),
        ],
    )


@pytest.fixture(scope="session")
def small_suite():
    cfg = small_run_config()
    defs = [(s.name, s.n_events, s.injections) for s in cfg.scenarios]
    return benchmark_suite(cfg.synth.seed, spec=cfg.synth, scenario_defs=defs)


@pytest.fixture(scope="session")
def small_model(small_suite):
    """A trained artifact over the small synthetic benchmark."""
    cfg = small_run_config()
    artifact, curve = train_model(small_suite.train.signals, None, cfg)
    return artifact, curve, cfg
