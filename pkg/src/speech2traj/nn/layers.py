"""Layer kernels with exact forward and backward passes.

All layers take channels-last batches (N, H, W, C) or (N, F) and keep the
input dtype: float32 for training/inference, float64 when the gradient
checker drives them. Each layer caches what its backward pass needs and
exposes parameter gradients through ``self.grads`` after ``backward``.

Convolutions are valid (no padding), stride 1, realized as windowed
tensor contractions so the heavy lifting lands in BLAS.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DegenerateBatch, ShapeMismatch


def glorot_uniform(fan_in: int, fan_out: int, shape, rng: np.random.Generator,
                   dtype=np.float32) -> np.ndarray:
    """Uniform on [-L, L], L = sqrt(6 / (fan_in + fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("fans must be >= 1")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    grads: dict


class Conv2D(Layer):
    """Valid cross-correlation plus bias. Weights are
    (out_channels, kh, kw, in_channels).

    Implemented as im2col GEMM with the column matrix kept transposed,
    (K, N*OH*OW): filling it row-by-row from input slices keeps the
    copies block-strided instead of element-gathered, which is what
    makes the wide first layer fast. The matrix is cached for the
    weight-gradient GEMM and dropped after backward.
    """

    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        self.weights = np.asarray(weights)
        self.bias = np.asarray(bias)
        if self.weights.ndim != 4 or self.bias.shape != (self.weights.shape[0],):
            raise ShapeMismatch(
                f"conv weights {self.weights.shape} / bias {self.bias.shape}")
        self._cols_t = None
        self._xshape = None
        self.grads = {}

    def params(self):
        return {"weights": self.weights, "bias": self.bias}

    def _w_flat(self):
        cout, kh, kw, cin = self.weights.shape
        # K-order (i, j, c) matching the im2col row order
        return self.weights.transpose(1, 2, 3, 0).reshape(kh * kw * cin, cout)

    def forward(self, x, training=False):
        cout, kh, kw, cin = self.weights.shape
        if x.ndim != 4 or x.shape[3] != cin or x.shape[1] < kh or x.shape[2] < kw:
            raise ShapeMismatch(
                f"conv input {x.shape} incompatible with filters {self.weights.shape}")
        n, h, w, _ = x.shape
        oh, ow = h - kh + 1, w - kw + 1
        m = n * oh * ow
        # reuse the column buffer across calls: fresh 100+ MB allocations
        # would pay first-touch page faults every step
        if (self._cols_t is None or self._cols_t.shape != (kh * kw * cin, m)
                or self._cols_t.dtype != x.dtype):
            self._cols_t = np.empty((kh * kw * cin, m), dtype=x.dtype)
        cols_t = self._cols_t
        cols_4d = cols_t.reshape(kh * kw * cin, n, oh, ow)
        k = 0
        for i in range(kh):
            for j in range(kw):
                for c in range(cin):
                    cols_4d[k] = x[:, i : i + oh, j : j + ow, c]
                    k += 1
        self._xshape = x.shape
        y = cols_t.T @ self._w_flat().astype(x.dtype, copy=False)
        return y.reshape(n, oh, ow, cout) + self.bias

    def backward(self, grad_out, need_input_grad: bool = True):
        cout, kh, kw, cin = self.weights.shape
        n, h, w, _ = self._xshape
        oh, ow = grad_out.shape[1], grad_out.shape[2]
        g_flat = grad_out.reshape(-1, cout)
        grad_w = (self._cols_t @ g_flat).reshape(kh, kw, cin, cout).transpose(3, 0, 1, 2)
        self.grads = {"weights": np.ascontiguousarray(grad_w),
                      "bias": grad_out.sum(axis=(0, 1, 2))}
        if not need_input_grad:
            return None
        # adjoint: project grad_out through the kernel, scatter windows back
        gcols_t = self._w_flat().astype(grad_out.dtype, copy=False) @ g_flat.T
        gcols_4d = gcols_t.reshape(kh * kw * cin, n, oh, ow)
        grad_x = np.zeros(self._xshape, dtype=grad_out.dtype)
        k = 0
        for i in range(kh):
            for j in range(kw):
                for c in range(cin):
                    grad_x[:, i : i + oh, j : j + ow, c] += gcols_4d[k]
                    k += 1
        return grad_x


class MaxPool2D(Layer):
    """Max over pool_h x pool_w windows placed every (stride_h, stride_w);
    the trailing remainder is dropped. Ties route the gradient to the
    first maximal element in row-major window order."""

    def __init__(self, pool_h: int, pool_w: int, stride_h: int | None = None,
                 stride_w: int | None = None):
        self.ph, self.pw = pool_h, pool_w
        self.sh = stride_h if stride_h is not None else pool_h
        self.sw = stride_w if stride_w is not None else pool_w
        self._cache = None
        self.grads = {}

    def forward(self, x, training=False):
        if x.ndim != 4 or x.shape[1] < self.ph or x.shape[2] < self.pw:
            raise ShapeMismatch(
                f"pool {self.ph}x{self.pw} does not fit input {x.shape}")
        windows = sliding_window_view(x, (self.ph, self.pw), axis=(1, 2))
        windows = windows[:, :: self.sh, :: self.sw]  # (N,OH,OW,C,ph,pw)
        n, oh, ow, c = windows.shape[:4]
        flat = windows.reshape(n, oh, ow, c, self.ph * self.pw)
        argmax = flat.argmax(axis=4)  # first max in row-major order
        out = np.take_along_axis(flat, argmax[..., None], axis=4)[..., 0]
        self._cache = (x.shape, x.dtype, argmax)
        return out

    def backward(self, grad_out):
        (xshape, xdtype, argmax) = self._cache
        n, h, w, c = xshape
        oh, ow = argmax.shape[1], argmax.shape[2]
        ni, ohi, owi, ci = np.indices((n, oh, ow, c), sparse=False)
        rows = ohi * self.sh + argmax // self.pw
        cols = owi * self.sw + argmax % self.pw
        grad_x = np.zeros(n * h * w * c, dtype=grad_out.dtype)
        lin = ((ni * h + rows) * w + cols) * c + ci
        np.add.at(grad_x, lin.ravel(), grad_out.ravel())
        return grad_x.reshape(xshape)


class BatchNorm(Layer):
    """Per-channel normalization over batch and spatial positions.

    Training uses batch statistics (biased variance) and updates running
    stats r <- momentum*r + (1-momentum)*batch_stat; inference uses the
    running stats. gamma/beta are trainable, running stats are not.
    """

    def __init__(self, channels: int, epsilon: float = 1e-3, momentum: float = 0.99,
                 dtype=np.float32):
        self.channels = channels
        self.epsilon = epsilon
        self.momentum = momentum
        self.gamma = np.ones(channels, dtype=dtype)
        self.beta = np.zeros(channels, dtype=dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._cache = None
        self.grads = {}

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def state(self):
        return {"gamma": self.gamma, "beta": self.beta,
                "running_mean": self.running_mean, "running_var": self.running_var}

    def forward(self, x, training=False, update_stats=True):
        if x.shape[-1] != self.channels:
            raise ShapeMismatch(f"input {x.shape} vs {self.channels} channels")
        if not training:
            inv = 1.0 / np.sqrt(self.running_var + self.epsilon)
            return self.gamma * (x - self.running_mean) * inv + self.beta
        if x.shape[0] < 2:
            raise DegenerateBatch(f"batchnorm training needs batch >= 2, got {x.shape[0]}")
        axes = tuple(range(x.ndim - 1))
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        inv = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (x - mean) * inv
        if update_stats:
            m = self.momentum
            self.running_mean[...] = m * self.running_mean + (1 - m) * mean
            self.running_var[...] = m * self.running_var + (1 - m) * var
        self._cache = (xhat, inv, axes)
        return self.gamma * xhat + self.beta

    def backward(self, grad_out):
        xhat, inv, axes = self._cache
        m = grad_out.size // self.channels
        dxhat = grad_out * self.gamma
        sum_dxhat = dxhat.sum(axis=axes)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=axes)
        grad_x = (inv / m) * (m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)
        self.grads = {"gamma": (grad_out * xhat).sum(axis=axes),
                      "beta": grad_out.sum(axis=axes)}
        return grad_x


class Dense(Layer):
    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        self.weights = np.asarray(weights)  # (in, out)
        self.bias = np.asarray(bias)
        self._x = None
        self.grads = {}

    def params(self):
        return {"weights": self.weights, "bias": self.bias}

    def forward(self, x, training=False):
        if x.ndim != 2 or x.shape[1] != self.weights.shape[0]:
            raise ShapeMismatch(f"dense input {x.shape} vs weights {self.weights.shape}")
        self._x = x
        return x @ self.weights + self.bias

    def backward(self, grad_out):
        self.grads = {"weights": self._x.T @ grad_out, "bias": grad_out.sum(axis=0)}
        return grad_out @ self.weights.T


class ReLU(Layer):
    """max(0, x); the subgradient at exactly 0 is 0."""

    def __init__(self):
        self._mask = None
        self.grads = {}

    def forward(self, x, training=False):
        self._mask = x > 0
        return np.where(self._mask, x, np.zeros((), dtype=x.dtype))

    def backward(self, grad_out):
        return grad_out * self._mask


class Dropout(Layer):
    """Inverted dropout: training zeroes entries with probability `rate`
    and rescales survivors by 1/(1-rate); inference is the identity."""

    def __init__(self, rate: float, rng: np.random.Generator | None = None):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng
        self._mask = None
        self.grads = {}

    def forward(self, x, training=False):
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        rng = self.rng if self.rng is not None else np.random.default_rng()
        self._mask = rng.random(x.shape) >= self.rate
        return x * self._mask / (1.0 - self.rate)

    def backward(self, grad_out):
        if self._mask is None:
            return grad_out
        return grad_out * self._mask / (1.0 - self.rate)


class Flatten(Layer):
    def __init__(self):
        self._shape = None
        self.grads = {}

    def forward(self, x, training=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out):
        return grad_out.reshape(self._shape)
