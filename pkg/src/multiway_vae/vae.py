"""Variational autoencoder with diagonal-Gaussian heads.

The encoder trunk maps an input vector through activated layers, then two
parallel linear heads emit the latent mean and log-variance.  A latent
sample z = mu + sigma * eps (eps standard normal) feeds the decoder trunk,
whose own two heads emit the mean and log-variance of the reconstruction
distribution.  The training loss is the negative evidence lower bound:

    loss = -(1/L) * sum_l log p(x | z_l)  +  KL(q(z|x) || N(0, I))

with the expectation estimated from L noise draws.  Because sampling is
expressed through the reparameterization, the loss is deterministic in
eps and every gradient below is exact; the test suite checks them against
central finite differences.

Log-variances are clamped to [-LOGVAR_CLAMP, LOGVAR_CLAMP] before
exponentiation so variances stay positive and bounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .multiway import EventSlice
from .network import ACTIVATIONS

LOGVAR_CLAMP = 10.0
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class LatentDistribution:
    """Diagonal Gaussian over the latent space: mean and standard deviation."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.mu.shape != self.sigma.shape:
            raise ValueError(f"mu/sigma shapes differ: {self.mu.shape} vs {self.sigma.shape}")
        if not np.all(np.isfinite(self.mu)) or not np.all(np.isfinite(self.sigma)):
            raise ValueError("distribution parameters must be finite")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma entries must be > 0")


@dataclass
class OutputDistribution:
    """Diagonal Gaussian over the reconstruction space."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.mu.shape != self.sigma.shape:
            raise ValueError(f"mu/sigma shapes differ: {self.mu.shape} vs {self.sigma.shape}")
        if not np.all(np.isfinite(self.mu)) or not np.all(np.isfinite(self.sigma)):
            raise ValueError("distribution parameters must be finite")
        if np.any(self.sigma <= 0):
            raise ValueError("sigma entries must be > 0")


@dataclass
class VaeParams:
    """All weights of the two-headed encoder/decoder pair.

    Trunk layers are activated; the four distribution heads are linear.
    Weight matrices have shape (out_width, in_width).  The same container
    doubles as the gradient structure returned by :func:`elbo_gradients`.
    """

    enc_weights: list[np.ndarray]
    enc_biases: list[np.ndarray]
    enc_mu_w: np.ndarray
    enc_mu_b: np.ndarray
    enc_logvar_w: np.ndarray
    enc_logvar_b: np.ndarray
    dec_weights: list[np.ndarray]
    dec_biases: list[np.ndarray]
    dec_mu_w: np.ndarray
    dec_mu_b: np.ndarray
    dec_logvar_w: np.ndarray
    dec_logvar_b: np.ndarray
    hidden_activation: str = "tanh"

    def __post_init__(self):
        if self.hidden_activation not in ACTIVATIONS:
            raise ValueError(f"unknown hidden_activation {self.hidden_activation!r}")
        if self.enc_mu_w.shape != self.enc_logvar_w.shape:
            raise ValueError("encoder heads must have matching shapes")
        if self.dec_mu_w.shape != self.dec_logvar_w.shape:
            raise ValueError("decoder heads must have matching shapes")
        if self.dec_mu_w.shape[0] != self.d_in:
            raise ValueError(
                f"decoder output width {self.dec_mu_w.shape[0]} must equal "
                f"encoder input width {self.d_in}"
            )
        for arr in param_arrays(self):
            if not np.all(np.isfinite(arr)):
                raise ValueError("parameters contain non-finite entries")

    @property
    def d_in(self) -> int:
        if self.enc_weights:
            return self.enc_weights[0].shape[1]
        return self.enc_mu_w.shape[1]

    @property
    def latent_dim(self) -> int:
        return self.enc_mu_w.shape[0]


def param_arrays(params: VaeParams) -> list[np.ndarray]:
    """Every parameter array in a fixed canonical order."""
    arrays: list[np.ndarray] = []
    for w, b in zip(params.enc_weights, params.enc_biases):
        arrays.extend([w, b])
    arrays.extend([params.enc_mu_w, params.enc_mu_b, params.enc_logvar_w, params.enc_logvar_b])
    for w, b in zip(params.dec_weights, params.dec_biases):
        arrays.extend([w, b])
    arrays.extend([params.dec_mu_w, params.dec_mu_b, params.dec_logvar_w, params.dec_logvar_b])
    return arrays


@dataclass
class VaeTrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 30
    mc_samples: int = 10
    latent_dim: int = 8
    encoder_hidden: tuple[int, ...] = (128, 64)
    hidden_activation: str = "tanh"
    init_scale: float | None = None  # None -> 1/sqrt(fan_in) per layer
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples}")
        if self.latent_dim < 1:
            raise ValueError(f"latent_dim must be >= 1, got {self.latent_dim}")
        if any(int(h) != h or h < 1 for h in self.encoder_hidden):
            raise ValueError(f"encoder_hidden widths must be positive, got {self.encoder_hidden}")
        if self.hidden_activation not in ACTIVATIONS:
            raise ValueError(f"unknown hidden_activation {self.hidden_activation!r}")


def init_vae_params(d_in: int, cfg: VaeTrainConfig, rng: np.random.Generator) -> VaeParams:
    """Seeded initialisation; decoder trunk mirrors the encoder trunk reversed."""

    def affine(n_out, n_in):
        eps = cfg.init_scale if cfg.init_scale is not None else 1.0 / np.sqrt(n_in)
        return rng.normal(0.0, eps, size=(n_out, n_in)), np.zeros(n_out)

    enc_widths = [d_in, *cfg.encoder_hidden]
    enc_weights, enc_biases = [], []
    for l in range(len(enc_widths) - 1):
        w, b = affine(enc_widths[l + 1], enc_widths[l])
        enc_weights.append(w)
        enc_biases.append(b)
    enc_mu_w, enc_mu_b = affine(cfg.latent_dim, enc_widths[-1])
    enc_lv_w, enc_lv_b = affine(cfg.latent_dim, enc_widths[-1])

    dec_widths = [cfg.latent_dim, *reversed(cfg.encoder_hidden)]
    dec_weights, dec_biases = [], []
    for l in range(len(dec_widths) - 1):
        w, b = affine(dec_widths[l + 1], dec_widths[l])
        dec_weights.append(w)
        dec_biases.append(b)
    dec_mu_w, dec_mu_b = affine(d_in, dec_widths[-1])
    dec_lv_w, dec_lv_b = affine(d_in, dec_widths[-1])

    return VaeParams(
        enc_weights=enc_weights,
        enc_biases=enc_biases,
        enc_mu_w=enc_mu_w,
        enc_mu_b=enc_mu_b,
        enc_logvar_w=enc_lv_w,
        enc_logvar_b=enc_lv_b,
        dec_weights=dec_weights,
        dec_biases=dec_biases,
        dec_mu_w=dec_mu_w,
        dec_mu_b=dec_mu_b,
        dec_logvar_w=dec_lv_w,
        dec_logvar_b=dec_lv_b,
        hidden_activation=cfg.hidden_activation,
    )


def _clamp_logvar(raw: np.ndarray) -> np.ndarray:
    return np.clip(raw, -LOGVAR_CLAMP, LOGVAR_CLAMP)


def _encode_raw(params: VaeParams, x: np.ndarray):
    """Encoder pass returning (trunk activations, mu_z, raw logvar)."""
    act, _ = ACTIVATIONS[params.hidden_activation]
    acts = [x]
    a = x
    for w, b in zip(params.enc_weights, params.enc_biases):
        a = act(w @ a + b)
        acts.append(a)
    mu = params.enc_mu_w @ a + params.enc_mu_b
    logvar_raw = params.enc_logvar_w @ a + params.enc_logvar_b
    return acts, mu, logvar_raw


def _decode_raw(params: VaeParams, z: np.ndarray):
    """Decoder pass on a (L, d_z) batch; returns (trunk activations, mu, raw logvar)."""
    act, _ = ACTIVATIONS[params.hidden_activation]
    acts = [z]
    a = z
    for w, b in zip(params.dec_weights, params.dec_biases):
        a = act(a @ w.T + b)
        acts.append(a)
    mu = a @ params.dec_mu_w.T + params.dec_mu_b
    logvar_raw = a @ params.dec_logvar_w.T + params.dec_logvar_b
    return acts, mu, logvar_raw


def encode(params: VaeParams, x: np.ndarray) -> LatentDistribution:
    """Posterior over the latent space for one input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.d_in,):
        raise ValueError(f"input must have shape ({params.d_in},), got {x.shape}")
    _, mu, logvar_raw = _encode_raw(params, x)
    sigma = np.exp(0.5 * _clamp_logvar(logvar_raw))
    return LatentDistribution(mu=mu, sigma=sigma)


def reparameterize(dist: LatentDistribution, eps: np.ndarray) -> np.ndarray:
    """z = mu + sigma * eps; eps may be one vector or an (L, d_z) batch."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape[-1] != dist.mu.shape[0]:
        raise ValueError(f"eps last dim must be {dist.mu.shape[0]}, got {eps.shape}")
    return dist.mu + dist.sigma * eps


def decode(params: VaeParams, z: np.ndarray) -> OutputDistribution:
    """Reconstruction distribution for one latent vector."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (params.latent_dim,):
        raise ValueError(f"latent must have shape ({params.latent_dim},), got {z.shape}")
    _, mu, logvar_raw = _decode_raw(params, z[None, :])
    sigma = np.exp(0.5 * _clamp_logvar(logvar_raw))
    return OutputDistribution(mu=mu[0], sigma=sigma[0])


def kl_to_standard_normal(dist: LatentDistribution) -> float:
    """KL(N(mu, diag sigma^2) || N(0, I)) = 0.5 * sum(mu^2 + sigma^2 - 1 - ln sigma^2)."""
    var = dist.sigma**2
    return float(0.5 * np.sum(dist.mu**2 + var - 1.0 - np.log(var)))


def gaussian_log_likelihood(x: np.ndarray, out: OutputDistribution) -> float:
    """Log density of x under the diagonal Gaussian ``out``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != out.mu.shape:
        raise ValueError(f"x shape {x.shape} must match distribution shape {out.mu.shape}")
    resid = x - out.mu
    return float(
        np.sum(-0.5 * LOG_2PI - np.log(out.sigma) - resid**2 / (2.0 * out.sigma**2))
    )


@dataclass
class _VaeTrace:
    enc_acts: list[np.ndarray]
    mu_z: np.ndarray
    logvar_z_raw: np.ndarray
    logvar_z: np.ndarray
    sigma_z: np.ndarray
    eps: np.ndarray
    z: np.ndarray
    dec_acts: list[np.ndarray]
    mu_x: np.ndarray
    logvar_x_raw: np.ndarray
    logvar_x: np.ndarray
    log_likelihoods: np.ndarray  # (L,)
    kl: float
    loss: float


def _vae_forward(params: VaeParams, x: np.ndarray, eps: np.ndarray) -> _VaeTrace:
    eps = np.asarray(eps, dtype=np.float64)
    if eps.ndim != 2 or eps.shape[1] != params.latent_dim:
        raise ValueError(f"eps must have shape (L, {params.latent_dim}), got {eps.shape}")
    enc_acts, mu_z, lv_z_raw = _encode_raw(params, x)
    lv_z = _clamp_logvar(lv_z_raw)
    sigma_z = np.exp(0.5 * lv_z)
    z = mu_z + sigma_z * eps  # (L, d_z)

    dec_acts, mu_x, lv_x_raw = _decode_raw(params, z)
    lv_x = _clamp_logvar(lv_x_raw)
    resid = x[None, :] - mu_x
    lls = np.sum(-0.5 * LOG_2PI - 0.5 * lv_x - 0.5 * resid**2 * np.exp(-lv_x), axis=1)

    kl = 0.5 * float(np.sum(mu_z**2 + np.exp(lv_z) - 1.0 - lv_z))
    loss = -float(np.mean(lls)) + kl
    return _VaeTrace(
        enc_acts=enc_acts,
        mu_z=mu_z,
        logvar_z_raw=lv_z_raw,
        logvar_z=lv_z,
        sigma_z=sigma_z,
        eps=eps,
        z=z,
        dec_acts=dec_acts,
        mu_x=mu_x,
        logvar_x_raw=lv_x_raw,
        logvar_x=lv_x,
        log_likelihoods=lls,
        kl=kl,
        loss=loss,
    )


def elbo_loss(params: VaeParams, x: np.ndarray, eps_batch: np.ndarray) -> float:
    """Negative ELBO for one sample under an explicit noise batch.

    Deterministic: the same (params, x, eps_batch) always gives the same loss.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.d_in,):
        raise ValueError(f"input must have shape ({params.d_in},), got {x.shape}")
    return _vae_forward(params, x, np.atleast_2d(eps_batch)).loss


def elbo_gradients(
    params: VaeParams, x: np.ndarray, eps_batch: np.ndarray
) -> tuple[float, list[np.ndarray]]:
    """Loss and its exact gradients w.r.t. every parameter.

    Backpropagates through the likelihood heads, the decoder trunk, the
    reparameterized sample, the KL term, and the encoder.  Gradients come
    back as arrays in :func:`param_arrays` order, shape-matched to the
    parameters.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.d_in,):
        raise ValueError(f"input must have shape ({params.d_in},), got {x.shape}")
    tr = _vae_forward(params, x, np.atleast_2d(eps_batch))
    _, dact = ACTIVATIONS[params.hidden_activation]
    L = tr.eps.shape[0]

    inv_var_x = np.exp(-tr.logvar_x)
    resid = x[None, :] - tr.mu_x
    d_mu_x = -(resid * inv_var_x) / L                       # (L, d_in)
    d_lv_x = 0.5 * (1.0 - resid**2 * inv_var_x) / L
    d_lv_x *= (np.abs(tr.logvar_x_raw) < LOGVAR_CLAMP)      # clamp is flat outside

    a_dec = tr.dec_acts[-1]
    g_dec_mu_w = d_mu_x.T @ a_dec
    g_dec_mu_b = d_mu_x.sum(axis=0)
    g_dec_lv_w = d_lv_x.T @ a_dec
    g_dec_lv_b = d_lv_x.sum(axis=0)

    dA = d_mu_x @ params.dec_mu_w + d_lv_x @ params.dec_logvar_w
    n_dec = len(params.dec_weights)
    g_dec_w: list[np.ndarray] = [None] * n_dec
    g_dec_b: list[np.ndarray] = [None] * n_dec
    for l in range(n_dec - 1, -1, -1):
        dZ = dA * dact(tr.dec_acts[l + 1])
        g_dec_w[l] = dZ.T @ tr.dec_acts[l]
        g_dec_b[l] = dZ.sum(axis=0)
        dA = dZ @ params.dec_weights[l]
    d_z = dA                                                # (L, d_z)

    # reparameterization: z = mu_z + exp(lv_z / 2) * eps, plus the KL term
    d_mu_z = d_z.sum(axis=0) + tr.mu_z
    d_lv_z = 0.5 * tr.sigma_z * (d_z * tr.eps).sum(axis=0) + 0.5 * (np.exp(tr.logvar_z) - 1.0)
    d_lv_z *= (np.abs(tr.logvar_z_raw) < LOGVAR_CLAMP)

    a_enc = tr.enc_acts[-1]
    g_enc_mu_w = np.outer(d_mu_z, a_enc)
    g_enc_mu_b = d_mu_z
    g_enc_lv_w = np.outer(d_lv_z, a_enc)
    g_enc_lv_b = d_lv_z

    da = params.enc_mu_w.T @ d_mu_z + params.enc_logvar_w.T @ d_lv_z
    n_enc = len(params.enc_weights)
    g_enc_w: list[np.ndarray] = [None] * n_enc
    g_enc_b: list[np.ndarray] = [None] * n_enc
    for l in range(n_enc - 1, -1, -1):
        dz = da * dact(tr.enc_acts[l + 1])
        g_enc_w[l] = np.outer(dz, tr.enc_acts[l])
        g_enc_b[l] = dz
        da = params.enc_weights[l].T @ dz

    grads: list[np.ndarray] = []
    for w, b in zip(g_enc_w, g_enc_b):
        grads.extend([w, b])
    grads.extend([g_enc_mu_w, g_enc_mu_b, g_enc_lv_w, g_enc_lv_b])
    for w, b in zip(g_dec_w, g_dec_b):
        grads.extend([w, b])
    grads.extend([g_dec_mu_w, g_dec_mu_b, g_dec_lv_w, g_dec_lv_b])
    return tr.loss, grads


def mc_reconstruction(
    params: VaeParams, x: np.ndarray, eps_batch: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo reconstruction statistics for a scoring pass.

    Returns the per-draw log-likelihoods (L,) and the squared residual
    (x - mu_x)^2 averaged over draws (d_in,).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.d_in,):
        raise ValueError(f"input must have shape ({params.d_in},), got {x.shape}")
    tr = _vae_forward(params, x, np.atleast_2d(eps_batch))
    sq_resid = ((x[None, :] - tr.mu_x) ** 2).mean(axis=0)
    return tr.log_likelihoods, sq_resid


def _as_matrix(data) -> np.ndarray:
    rows = [s.flat if isinstance(s, EventSlice) else np.asarray(s, dtype=np.float64) for s in data]
    mat = np.stack(rows)
    if mat.ndim != 2:
        raise ValueError(f"training data must stack to 2-d, got shape {mat.shape}")
    return mat


def train_vae(
    data,
    cfg: VaeTrainConfig,
    on_epoch: Callable[[int, float], None] | None = None,
) -> tuple[VaeParams, list[float]]:
    """Per-sample SGD on the negative ELBO with fresh noise every step.

    Deterministic for a given config: the seed fixes initialisation,
    shuffles, and all noise draws.  Returns the trained parameters and the
    per-epoch mean loss curve.  Aborts with a diagnostic if the loss stops
    being finite.
    """
    mat = _as_matrix(data)
    n_samples, d = mat.shape
    rng = np.random.default_rng(cfg.seed)
    params = init_vae_params(d, cfg, rng)
    arrays = param_arrays(params)

    curve: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_samples)
        epoch_loss = 0.0
        for i in order:
            eps = rng.standard_normal((cfg.mc_samples, cfg.latent_dim))
            loss, grads = elbo_gradients(params, mat[i], eps)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training loss became non-finite at epoch {epoch}, sample {i}; "
                    f"reduce the learning rate (currently {cfg.learning_rate})"
                )
            epoch_loss += loss
            for p, g in zip(arrays, grads):
                p -= cfg.learning_rate * g
        curve.append(epoch_loss / n_samples)
        if on_epoch is not None:
            on_epoch(epoch, curve[-1])
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise RuntimeError(
                "trained parameters contain non-finite entries; "
                f"reduce the learning rate (currently {cfg.learning_rate})"
            )
    return params, curve
