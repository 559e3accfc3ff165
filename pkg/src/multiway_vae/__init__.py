"""Multiway VAE anomaly toolkit.

Fuses multi-sensor spectral features in a variational autoencoder, scores
events by reconstruction probability, grades severity from score
magnitudes, and localizes anomalous sensors with a k-NN layer over
per-sensor reconstruction-error profiles.
"""

from .artifact import ArtifactFormatError, ModelArtifact, load_artifact, save_artifact
from .config import ConfigError, RunConfig, default_config, load_config
from .detection import (
    AnomalyScore,
    DetectionConfig,
    calibrate_threshold,
    classify,
    evaluate_decisions,
    reconstruction_probability,
    score_events,
    severity_trace,
)
from .localization import (
    LocalizationConfig,
    LocationScore,
    SensorIdentityBaseline,
    build_sensor_baseline,
    knn_location_scores,
    localization_table,
    sensor_error_profile,
)
from .multiway import (
    EventSlice,
    FeatureScaler,
    MultiwayTensor,
    PreprocessConfig,
    all_slices,
    build_tensor,
    fft_features,
    frontal_slice,
    normalize_signal,
    split_events,
)
from .network import (
    ForwardTrace,
    NetworkParams,
    TrainConfig,
    backprop,
    detect_by_re,
    forward,
    mse_cost,
    reconstruction_error,
    sgd_step,
    sigmoid,
    tanh,
    train_autoencoder,
)
from .pipeline import ScoredEvent, ScoreResult, score_model, train_model
from .synthetic import (
    BenchmarkSuite,
    DamageSpec,
    SyntheticDataset,
    SyntheticSpec,
    benchmark_suite,
    generate,
)
from .vae import (
    LatentDistribution,
    OutputDistribution,
    VaeParams,
    VaeTrainConfig,
    decode,
    elbo_gradients,
    elbo_loss,
    encode,
    gaussian_log_likelihood,
    kl_to_standard_normal,
    mc_reconstruction,
    param_arrays,
    reparameterize,
    train_vae,
)

__version__ = "0.1.0"
