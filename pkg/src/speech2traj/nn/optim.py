"""Optimizers: Adam with bias correction, plus plain gradient descent
(used only by the full-batch monotonicity check)."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch


class Adam:
    """Standard Adam; parameters are updated in place.

    m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2,
    theta <- theta - lr * mhat / (sqrt(vhat) + eps)
    """

    def __init__(self, params: dict, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p) for k, p in params.items()}
        self.v = {k: np.zeros_like(p) for k, p in params.items()}

    def step(self, grads: dict) -> None:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self.params.items():
            g = np.asarray(grads[name], dtype=p.dtype)
            if g.shape != p.shape:
                raise ShapeMismatch(f"{name}: grad {g.shape} vs param {p.shape}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class GradientDescent:
    def __init__(self, params: dict, lr: float = 1e-3):
        self.params = params
        self.lr = lr
        self.step_count = 0

    def step(self, grads: dict) -> None:
        self.step_count += 1
        for name, p in self.params.items():
            g = np.asarray(grads[name], dtype=p.dtype)
            if g.shape != p.shape:
                raise ShapeMismatch(f"{name}: grad {g.shape} vs param {p.shape}")
            p -= self.lr * g
