from .layers import (
    BatchNorm,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool2D,
    ReLU,
    glorot_uniform,
)
from .loss import mse_loss, rmse
from .optim import Adam, GradientDescent

__all__ = [
    "Conv2D",
    "MaxPool2D",
    "BatchNorm",
    "Dense",
    "ReLU",
    "Dropout",
    "Flatten",
    "glorot_uniform",
    "mse_loss",
    "rmse",
    "Adam",
    "GradientDescent",
]
