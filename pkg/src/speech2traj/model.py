"""The ten-layer network: two ReLU convolutions with max pooling and
batch normalization, a flatten, and two ReLU dense layers with dropout
between them. Only the second convolution's filter count varies.

Layer order and hyperparameters (filter sizes 10x7 and 7x5, pools 7x5
and 5x3 with matching strides, dense widths 64 and 5) are fixed; the
shape chain from a 129x71x1 input is asserted at build time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .features import N_BINS, N_FRAMES
from .nn import BatchNorm, Conv2D, Dense, Dropout, Flatten, MaxPool2D, ReLU, glorot_uniform

ALLOWED_FILTERS2 = (32, 64, 128, 256)


@dataclass
class NetworkSpec:
    filters2: int = 256
    dropout_rate: float = 0.5

    def __post_init__(self):
        if self.filters2 not in ALLOWED_FILTERS2:
            raise InvalidSpec(
                f"filters2 must be one of {ALLOWED_FILTERS2}, got {self.filters2}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidSpec(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    def to_dict(self):
        return {"filters2": self.filters2, "dropout_rate": self.dropout_rate}


def expected_shape_chain(filters2: int):
    """Output shape after each layer row, input included."""
    f2 = filters2
    return [
        (N_BINS, N_FRAMES, 1),
        (120, 65, 8),
        (17, 13, 8),
        (17, 13, 8),
        (11, 9, f2),
        (2, 3, f2),
        (2, 3, f2),
        (6 * f2,),
        (64,),
        (64,),
        (5,),
    ]


class Network:
    """Assembled network; owns layer objects and their parameters."""

    def __init__(self, spec: NetworkSpec, rng_seed: int = 0, dtype=np.float32):
        self.spec = spec
        self.dtype = dtype
        rng = np.random.default_rng(rng_seed)
        f2 = spec.filters2

        conv1 = Conv2D(glorot_uniform(10 * 7 * 1, 10 * 7 * 8, (8, 10, 7, 1), rng, dtype),
                       np.zeros(8, dtype=dtype))
        conv2 = Conv2D(glorot_uniform(7 * 5 * 8, 7 * 5 * f2, (f2, 7, 5, 8), rng, dtype),
                       np.zeros(f2, dtype=dtype))
        dense1 = Dense(glorot_uniform(6 * f2, 64, (6 * f2, 64), rng, dtype),
                       np.zeros(64, dtype=dtype))
        # final bias starts at the top of the target range: zero-started
        # ReLU regression outputs can die irrecoverably (the gradient
        # vanishes once a unit is negative for every example)
        dense2 = Dense(glorot_uniform(64, 5, (64, 5), rng, dtype),
                       np.full(5, 1.0, dtype=dtype))

        self.conv1, self.conv2 = conv1, conv2
        self.bn1, self.bn2 = BatchNorm(8, dtype=dtype), BatchNorm(f2, dtype=dtype)
        self.dense1, self.dense2 = dense1, dense2
        self.dropout = Dropout(spec.dropout_rate)
        self._pipeline = [
            ("conv1", conv1), ("relu1", ReLU()), ("pool1", MaxPool2D(7, 5)),
            ("bn1", self.bn1),
            ("conv2", conv2), ("relu2", ReLU()), ("pool2", MaxPool2D(5, 3)),
            ("bn2", self.bn2),
            ("flatten", Flatten()),
            ("dense1", dense1), ("relu3", ReLU()),
            ("dropout", self.dropout),
            ("dense2", dense2), ("relu4", ReLU()),
        ]
        assert self.shape_chain() == expected_shape_chain(f2)

    # shape algebra: conv shrinks by k-1, pool floors by its stride
    def shape_chain(self):
        f2 = self.spec.filters2
        h, w, c = N_BINS, N_FRAMES, 1
        chain = [(h, w, c)]
        h, w, c = h - 10 + 1, w - 7 + 1, 8
        chain.append((h, w, c))
        h, w = (h - 7) // 7 + 1, (w - 5) // 5 + 1
        chain.append((h, w, c))
        chain.append((h, w, c))  # batchnorm
        h, w, c = h - 7 + 1, w - 5 + 1, f2
        chain.append((h, w, c))
        h, w = (h - 5) // 5 + 1, (w - 3) // 3 + 1
        chain.append((h, w, c))
        chain.append((h, w, c))
        chain.append((h * w * c,))
        chain.append((64,))
        chain.append((64,))  # dropout
        chain.append((5,))
        return chain

    def forward_batch(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        for _, layer in self._pipeline:
            x = layer.forward(x, training=training)
        return x

    def calibrate_batchnorm(self, batch_source) -> None:
        """Replace the EMA running statistics with exact per-channel
        statistics over a dataset (standard post-training re-estimation;
        the EMA always lags the final parameters). `batch_source` is a
        zero-argument callable yielding input batches."""
        bn_positions = [i for i, (_, layer) in enumerate(self._pipeline)
                        if isinstance(layer, BatchNorm)]
        for pos in bn_positions:
            total = np.zeros(1, dtype=np.float64)
            sum_ = 0.0
            sumsq = 0.0
            for x in batch_source():
                h = x
                for _, layer in self._pipeline[:pos]:
                    h = layer.forward(h, training=False)
                axes = tuple(range(h.ndim - 1))
                h64 = h.astype(np.float64)
                sum_ = sum_ + h64.sum(axis=axes)
                sumsq = sumsq + (h64 * h64).sum(axis=axes)
                total = total + h.size // h.shape[-1]
            mean = sum_ / total
            var = np.maximum(sumsq / total - mean * mean, 0.0)
            bn = self._pipeline[pos][1]
            bn.running_mean[...] = mean.astype(self.dtype)
            bn.running_var[...] = var.astype(self.dtype)

    def backward_batch(self, grad: np.ndarray) -> dict:
        grads = {}
        first_name = self._pipeline[0][0]
        for name, layer in reversed(self._pipeline):
            if name == first_name and isinstance(layer, Conv2D):
                layer.backward(grad, need_input_grad=False)  # nothing upstream
            else:
                grad = layer.backward(grad)
            for pname, g in layer.grads.items():
                grads[f"{name}.{pname}"] = g
        return grads

    def forward(self, feature: np.ndarray, mode: str = "infer") -> np.ndarray:
        """Single 129x71 feature to a 5-vector (nonnegative, unbounded above)."""
        feature = np.asarray(feature)
        if feature.shape != (N_BINS, N_FRAMES):
            raise InvalidSpec(f"feature must be ({N_BINS}, {N_FRAMES}), got {feature.shape}")
        x = feature.astype(self.dtype)[None, :, :, None]
        return self.forward_batch(x, training=(mode == "train"))[0]

    def trainable_params(self) -> dict:
        out = {}
        for name, layer in self._pipeline:
            for pname, p in layer.params().items():
                out[f"{name}.{pname}"] = p
        return out

    def state_tensors(self) -> dict:
        """Every stored tensor (trainable + running stats) in declaration order."""
        out = {}
        for name, layer in self._pipeline:
            tensors = layer.state() if isinstance(layer, BatchNorm) else layer.params()
            for pname, p in tensors.items():
                out[f"{name}.{pname}"] = p
        return out

    def trainable_param_count(self) -> int:
        return sum(p.size for p in self.trainable_params().values())

    def stored_param_count(self) -> int:
        return sum(p.size for p in self.state_tensors().values())

    def layer_table(self):
        """Rows mirroring the network summary table: per-layer stored
        parameter counts (batchnorm rows count running stats too)."""
        f2 = self.spec.filters2
        chain = self.shape_chain()

        def fmt(shape):
            return " x ".join(str(d) for d in shape)

        rows = [
            (0, "Input (Log of spectrogram)", "-", "-", "-", "-", fmt(chain[0]), 0),
            (1, "Convolution 2D", "8", "10 x 7", "1", "ReLU", fmt(chain[1]),
             self.conv1.weights.size + self.conv1.bias.size),
            (2, "Max Pooling 2D", "-", "7 x 5", "7 x 5", "Max", fmt(chain[2]), 0),
            (3, "Batch normalization", "-", "-", "-", "-", fmt(chain[3]), 4 * 8),
            (4, "Convolution 2D", str(f2), "7 x 5", "1", "ReLU", fmt(chain[4]),
             self.conv2.weights.size + self.conv2.bias.size),
            (5, "Max Pooling 2D", "-", "5 x 3", "5 x 3", "Max", fmt(chain[5]), 0),
            (6, "Batch normalization", "-", "-", "-", "-", fmt(chain[6]), 4 * f2),
            (7, "Flatten", "-", "-", "-", "-", fmt(chain[7]), 0),
            (8, "Dense", "-", "-", "-", "ReLU", fmt(chain[8]),
             self.dense1.weights.size + self.dense1.bias.size),
            (9, "Drop out", "-", "-", "-", "-", fmt(chain[9]), 0),
            (10, "Dense", "-", "-", "-", "ReLU", fmt(chain[10]),
             self.dense2.weights.size + self.dense2.bias.size),
        ]
        return rows


def build_network(spec: NetworkSpec, rng_seed: int = 0, dtype=np.float32) -> Network:
    return Network(spec, rng_seed=rng_seed, dtype=dtype)


def describe(spec: NetworkSpec) -> str:
    net = build_network(spec)
    header = ("Layer", "Type", "# filters", "Filter size", "Stride",
              "Activation", "Output shape", "# Parameters")
    rows = [tuple(str(c) for c in row) for row in net.layer_table()]
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(r))))
    lines.append("")
    lines.append(f"Total stored parameters:    {net.stored_param_count():,}")
    lines.append(f"Total trainable parameters: {net.trainable_param_count():,}")
    return "\n".join(lines)
