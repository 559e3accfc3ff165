"""Shared test utilities: independent oracles and parameter plumbing.

The oracles here deliberately avoid the library's own code paths: the DFT
oracle is the O(N^2) definition, and the gradient checks perturb raw
parameter arrays through the public loss functions.
"""

from __future__ import annotations

import numpy as np

from multiway_vae.network import NetworkParams
from multiway_vae.vae import VaeParams, VaeTrainConfig, init_vae_params, param_arrays


def naive_dft_magnitudes(signal: np.ndarray, keep_bins: int) -> np.ndarray:
    """O(N^2) discrete Fourier transform magnitudes, straight from the sum."""
    signal = np.asarray(signal, dtype=np.float64)
    n = signal.size
    out = np.empty(keep_bins)
    for k in range(keep_bins):
        re = 0.0
        im = 0.0
        for t in range(n):
            angle = -2.0 * np.pi * k * t / n
            re += signal[t] * np.cos(angle)
            im += signal[t] * np.sin(angle)
        out[k] = np.hypot(re, im)
    return out


def network_arrays(params: NetworkParams) -> list[np.ndarray]:
    arrays = []
    for w, b in zip(params.weights, params.biases):
        arrays.extend([w, b])
    return arrays


def finite_difference_check(arrays, analytic, loss_fn, step=1e-5, denom_floor=1e-6):
    """Max relative error between analytic gradients and central differences.

    ``arrays`` are perturbed in place entry by entry; ``analytic`` is the
    matching list of gradient arrays; ``loss_fn()`` re-evaluates the loss
    for the current parameter state.
    """
    worst = 0.0
    for arr, grad in zip(arrays, analytic):
        flat = arr.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            loss_plus = loss_fn()
            flat[i] = orig - step
            loss_minus = loss_fn()
            flat[i] = orig
            fd = (loss_plus - loss_minus) / (2.0 * step)
            rel = abs(fd - gflat[i]) / max(abs(fd), abs(gflat[i]), denom_floor)
            worst = max(worst, rel)
    return worst


def zero_vae(d_in: int, d_z: int, hidden: tuple[int, ...] = ()) -> VaeParams:
    """All-zero parameters: encoder gives N(0, I), decoder gives N(0, I)."""
    cfg = VaeTrainConfig(latent_dim=d_z, encoder_hidden=hidden, init_scale=1e-9, seed=0)
    params = init_vae_params(d_in, cfg, np.random.default_rng(0))
    for arr in param_arrays(params):
        arr[...] = 0.0
    return params


def random_vae(d_in: int, d_z: int, hidden: tuple[int, ...], seed: int,
               spread: float = 0.3) -> VaeParams:
    rng = np.random.default_rng(seed)
    cfg = VaeTrainConfig(latent_dim=d_z, encoder_hidden=hidden, seed=seed)
    params = init_vae_params(d_in, cfg, rng)
    for arr in param_arrays(params):
        arr += rng.normal(0.0, spread, arr.shape)
    return params
