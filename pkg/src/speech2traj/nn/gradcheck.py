"""Finite-difference verification of every kernel's backward pass.

Runs in float64 on small random tensors. For each kernel we reduce the
forward output to a scalar through a fixed random projection R, so the
analytic gradient is just backward(R); the numeric side is a central
difference with h = 1e-5. ReLU is probed away from 0 where the kink
would invalidate the comparison.
"""

from __future__ import annotations

import numpy as np

from .layers import BatchNorm, Conv2D, Dense, MaxPool2D, ReLU, glorot_uniform
from .loss import mse_loss

H_STEP = 1e-5
TOLERANCE = 1e-4


def numeric_gradient(f, x: np.ndarray, h: float = H_STEP) -> np.ndarray:
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-6)
    return float(np.abs(analytic - numeric).max() / scale)


def _check_layer(layer, x, rng, forward=None):
    """Max relative error over the layer's input and parameter gradients."""
    run = forward if forward is not None else (lambda: layer.forward(x, training=True))
    out = run()
    r = rng.standard_normal(out.shape)

    def scalar():
        return float((run() * r).sum())

    # analytic gradients first, from a forward pass at the unperturbed point
    run()
    analytic_x = layer.backward(r)
    analytic_params = {name: g.copy() for name, g in layer.grads.items()}
    errors = [relative_error(analytic_x, numeric_gradient(scalar, x))]
    for name, p in layer.params().items():
        errors.append(relative_error(analytic_params[name], numeric_gradient(scalar, p)))
    return max(errors)


def check_conv2d(seed=0) -> float:
    rng = np.random.default_rng(seed)
    w = glorot_uniform(3 * 2 * 2, 3 * 2 * 4, (4, 3, 2, 2), rng, dtype=np.float64)
    layer = Conv2D(w, rng.standard_normal(4))
    x = rng.standard_normal((2, 6, 5, 2))
    return _check_layer(layer, x, rng)


def check_maxpool2d(seed=0) -> float:
    rng = np.random.default_rng(seed)
    layer = MaxPool2D(2, 3)
    x = rng.standard_normal((2, 6, 7, 3))
    return _check_layer(layer, x, rng)


def check_batchnorm(seed=0) -> float:
    rng = np.random.default_rng(seed)
    layer = BatchNorm(3, dtype=np.float64)
    layer.gamma[:] = rng.uniform(0.5, 1.5, 3)
    layer.beta[:] = rng.standard_normal(3)
    x = rng.standard_normal((4, 5, 2, 3))
    forward = lambda: layer.forward(x, training=True, update_stats=False)
    return _check_layer(layer, x, rng, forward=forward)


def check_dense(seed=0) -> float:
    rng = np.random.default_rng(seed)
    w = glorot_uniform(6, 4, (6, 4), rng, dtype=np.float64)
    layer = Dense(w, rng.standard_normal(4))
    x = rng.standard_normal((3, 6))
    return _check_layer(layer, x, rng)


def check_relu(seed=0) -> float:
    rng = np.random.default_rng(seed)
    layer = ReLU()
    # keep probes away from the kink at 0
    x = rng.uniform(0.1, 1.0, (4, 7)) * rng.choice([-1.0, 1.0], (4, 7))
    return _check_layer(layer, x, rng)


def check_mse_loss(seed=0) -> float:
    rng = np.random.default_rng(seed)
    desired = rng.uniform(0, 1, (6, 5))
    inferred = rng.standard_normal((6, 5))
    _, analytic = mse_loss(desired, inferred)
    numeric = numeric_gradient(lambda: mse_loss(desired, inferred)[0], inferred)
    return relative_error(analytic, numeric)


def check_all(seed=0) -> dict:
    return {
        "conv2d": check_conv2d(seed),
        "maxpool2d": check_maxpool2d(seed),
        "batchnorm": check_batchnorm(seed),
        "dense": check_dense(seed),
        "relu": check_relu(seed),
        "mse_loss": check_mse_loss(seed),
    }
