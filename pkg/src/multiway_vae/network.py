"""Plain feedforward autoencoder built on explicit matrix math.

Layers compute z = W a + b followed by an elementwise activation; the
output layer is always linear so reconstructions are not squashed into a
fixed interval.  Training is per-sample stochastic gradient descent on the
squared reconstruction cost, with a seeded shuffle each epoch so runs are
bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .multiway import EventSlice


def sigmoid(z):
    """Logistic function, stable for large |z|."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def tanh(z):
    """Hyperbolic tangent, (e^z - e^-z) / (e^z + e^-z)."""
    out = np.tanh(np.asarray(z, dtype=np.float64))
    if out.ndim == 0:
        return float(out)
    return out


# activation -> (f, f' expressed in terms of the activation value a = f(z))
ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "sigmoid": (sigmoid, lambda a: a * (1.0 - a)),
    "tanh": (tanh, lambda a: 1.0 - a * a),
}


@dataclass
class NetworkParams:
    """Weights and biases of a feedforward net.

    topology[0] is the input width, topology[-1] the output width;
    weights[l] has shape (topology[l+1], topology[l]).  Hidden layers use
    ``hidden_activation``; the output layer is linear.
    """

    topology: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hidden_activation: str = "tanh"

    def __post_init__(self):
        if self.hidden_activation not in ACTIVATIONS:
            raise ValueError(
                f"unknown hidden_activation {self.hidden_activation!r}; "
                f"choose from {sorted(ACTIVATIONS)}"
            )
        if len(self.topology) < 2:
            raise ValueError("topology needs at least input and output widths")
        n_layers = len(self.topology) - 1
        if len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise ValueError(
                f"topology implies {n_layers} layers, got {len(self.weights)} weight "
                f"and {len(self.biases)} bias arrays"
            )
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            want = (self.topology[l + 1], self.topology[l])
            if w.shape != want:
                raise ValueError(f"layer {l} weights must have shape {want}, got {w.shape}")
            if b.shape != (self.topology[l + 1],):
                raise ValueError(
                    f"layer {l} bias must have shape ({self.topology[l + 1]},), got {b.shape}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {l} contains non-finite parameters")

    @property
    def d_in(self) -> int:
        return self.topology[0]

    @property
    def d_out(self) -> int:
        return self.topology[-1]


@dataclass
class ForwardTrace:
    """Per-layer pre-activations and activations of one forward pass.

    activations[0] is the input itself; activations[-1] the reconstruction.
    """

    pre_activations: list[np.ndarray]
    activations: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 100
    hidden: tuple[int, ...] = (32, 8, 32)
    hidden_activation: str = "tanh"
    init_scale: float | None = None  # None -> 1/sqrt(fan_in) per layer
    seed: int = 0
    early_stop: bool = False
    early_stop_tol: float = 1e-8
    early_stop_patience: int = 10

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.init_scale is not None and self.init_scale <= 0:
            raise ValueError(f"init_scale must be > 0, got {self.init_scale}")
        if self.hidden_activation not in ACTIVATIONS:
            raise ValueError(f"unknown hidden_activation {self.hidden_activation!r}")


def init_params(
    topology: Sequence[int],
    hidden_activation: str,
    init_scale: float | None,
    rng: np.random.Generator,
) -> NetworkParams:
    """Weights ~ N(0, eps^2) with eps = init_scale or 1/sqrt(fan_in); biases zero."""
    weights, biases = [], []
    for l in range(len(topology) - 1):
        fan_in = topology[l]
        eps = init_scale if init_scale is not None else 1.0 / np.sqrt(fan_in)
        weights.append(rng.normal(0.0, eps, size=(topology[l + 1], fan_in)))
        biases.append(np.zeros(topology[l + 1]))
    return NetworkParams(
        topology=list(topology),
        weights=weights,
        biases=biases,
        hidden_activation=hidden_activation,
    )


def forward(params: NetworkParams, x: np.ndarray) -> ForwardTrace:
    """Feedforward pass recording every layer's z and a."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.d_in,):
        raise ValueError(f"input must have shape ({params.d_in},), got {x.shape}")
    act, _ = ACTIVATIONS[params.hidden_activation]
    n_layers = len(params.weights)
    zs, activations = [], [x]
    a = x
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = w @ a + b
        zs.append(z)
        a = z if l == n_layers - 1 else act(z)  # linear output layer
        activations.append(a)
    return ForwardTrace(pre_activations=zs, activations=activations)


def mse_cost(batch: Sequence[tuple[np.ndarray, np.ndarray]]) -> float:
    """(1/n) * sum over the batch of 0.5 * ||x - xhat||^2."""
    if len(batch) == 0:
        raise ValueError("batch is empty")
    total = 0.0
    for x, xhat in batch:
        x = np.asarray(x, dtype=np.float64)
        xhat = np.asarray(xhat, dtype=np.float64)
        if x.shape != xhat.shape:
            raise ValueError(f"pair shapes differ: {x.shape} vs {xhat.shape}")
        diff = x - xhat
        total += 0.5 * float(diff @ diff)
    return total / len(batch)


def backprop(params: NetworkParams, trace: ForwardTrace, x: np.ndarray) -> NetworkParams:
    """Gradients of the single-sample cost 0.5 * ||x - xhat||^2.

    Returned in a params-shaped container: ``weights`` holds dJ/dW and
    ``biases`` dJ/db, layer by layer.
    """
    x = np.asarray(x, dtype=np.float64)
    _, dact = ACTIVATIONS[params.hidden_activation]
    n_layers = len(params.weights)
    grads_w = [None] * n_layers
    grads_b = [None] * n_layers

    delta = trace.output - x  # linear output layer
    for l in range(n_layers - 1, -1, -1):
        a_prev = trace.activations[l]
        grads_w[l] = np.outer(delta, a_prev)
        grads_b[l] = delta.copy()
        if l > 0:
            delta = (params.weights[l].T @ delta) * dact(trace.activations[l])
    return NetworkParams(
        topology=list(params.topology),
        weights=grads_w,
        biases=grads_b,
        hidden_activation=params.hidden_activation,
    )


def sgd_step(params: NetworkParams, grads: NetworkParams, learning_rate: float) -> NetworkParams:
    """One descent step: every parameter decremented by learning_rate * gradient."""
    weights = [w - learning_rate * g for w, g in zip(params.weights, grads.weights)]
    biases = [b - learning_rate * g for b, g in zip(params.biases, grads.biases)]
    return NetworkParams(
        topology=list(params.topology),
        weights=weights,
        biases=biases,
        hidden_activation=params.hidden_activation,
    )


def _as_matrix(data) -> np.ndarray:
    rows = [s.flat if isinstance(s, EventSlice) else np.asarray(s, dtype=np.float64) for s in data]
    mat = np.stack(rows)
    if mat.ndim != 2:
        raise ValueError(f"training data must stack to 2-d, got shape {mat.shape}")
    return mat


def train_autoencoder(data, cfg: TrainConfig) -> tuple[NetworkParams, list[float]]:
    """Per-sample SGD over shuffled epochs; returns params and the epoch cost curve.

    The seed fixes initialisation and shuffle order, so two runs with the
    same config produce bit-identical parameters.
    """
    mat = _as_matrix(data)
    n_samples, d = mat.shape
    rng = np.random.default_rng(cfg.seed)
    topology = [d, *cfg.hidden, d]
    params = init_params(topology, cfg.hidden_activation, cfg.init_scale, rng)

    curve: list[float] = []
    flat_count = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n_samples)
        epoch_cost = 0.0
        for i in order:
            x = mat[i]
            trace = forward(params, x)
            epoch_cost += mse_cost([(x, trace.output)])
            grads = backprop(params, trace, x)
            params = sgd_step(params, grads, cfg.learning_rate)
        curve.append(epoch_cost / n_samples)
        if cfg.early_stop and len(curve) >= 2:
            if abs(curve[-1] - curve[-2]) < cfg.early_stop_tol:
                flat_count += 1
                if flat_count >= cfg.early_stop_patience:
                    break
            else:
                flat_count = 0
    return params, curve


def reconstruction_error(params: NetworkParams, x: np.ndarray) -> float:
    """Squared Euclidean distance between x and its reconstruction."""
    diff = np.asarray(x, dtype=np.float64) - forward(params, x).output
    return float(diff @ diff)


def detect_by_re(params: NetworkParams, samples, threshold: float) -> list[bool]:
    """Flag each sample whose reconstruction error strictly exceeds the threshold."""
    if threshold <= 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    return [reconstruction_error(params, x) > threshold for x in samples]
