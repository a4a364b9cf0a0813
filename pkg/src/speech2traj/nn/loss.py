"""Trajectory regression loss: MSE = (1/(5N)) sum l'l with
l = desired - inferred, and its square root."""

from __future__ import annotations

import math

import numpy as np

from ..errors import NegativeInput, ShapeMismatch


def mse_loss(desired: np.ndarray, inferred: np.ndarray):
    """Returns (MSE, gradient w.r.t. inferred = -2 l / (5N))."""
    desired = np.asarray(desired)
    inferred = np.asarray(inferred)
    if desired.shape != inferred.shape:
        raise ShapeMismatch(f"desired {desired.shape} vs inferred {inferred.shape}")
    loss_vec = desired - inferred
    mse = float((loss_vec * loss_vec).sum()) / loss_vec.size
    grad = (-2.0 / loss_vec.size) * loss_vec
    return mse, grad


def rmse(mse: float) -> float:
    if mse < 0:
        raise NegativeInput(f"mse must be >= 0, got {mse}")
    return math.sqrt(mse)
