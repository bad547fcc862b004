"""Minimal differentiable kernels for the fixed 1-D GAN architecture."""

from .layers import (
    Activation,
    BatchNorm1d,
    Conv1d,
    Dense,
    Dropout,
    upsample,
    upsample_backward,
)
from .optim import Adam
from .gradcheck import max_rel_error, numeric_gradient, gradcheck_layer
from .checkpoint import save_blobs, load_blobs

__all__ = [
    "Activation",
    "BatchNorm1d",
    "Conv1d",
    "Dense",
    "Dropout",
    "upsample",
    "upsample_backward",
    "Adam",
    "max_rel_error",
    "numeric_gradient",
    "gradcheck_layer",
    "save_blobs",
    "load_blobs",
]
