"""Structured sparse convolutional autoencoder built on numpy/numba.

A convolutional encoder, a two-stage l2 featuremap normalization (across
the maps at each site, then within each map), an l1 sparsity objective on
the normalized maps, and a deconvolutional decoder with switch-transfer
unpooling; trained by momentum SGD and evaluated with sparsity and
delta-filter diagnostics against the plain autoencoder baseline.
"""

from .data import Dataset, load_cifar10_bin, load_idx, synth_shapes
from .kernels import BACKEND
from .loss import LossBreakdown, recon_loss, sparsity_loss, total_loss
from .metrics import (
    TrainReport,
    activity_uniformity,
    delta_filter_count,
    delta_filter_score,
    hoyer_sparseness,
    population_sparsity,
    read_csv,
    write_csv,
)
from .model import ModelConfig, ModelState, backward, build, forward, grad_check
from .optim import OptimConfig, sgd_step, train
from .rng import Rng
from .tensor import inner_product, rand_uniform, tensor_new

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Dataset",
    "LossBreakdown",
    "ModelConfig",
    "ModelState",
    "OptimConfig",
    "Rng",
    "TrainReport",
    "activity_uniformity",
    "backward",
    "build",
    "delta_filter_count",
    "delta_filter_score",
    "forward",
    "grad_check",
    "hoyer_sparseness",
    "inner_product",
    "load_cifar10_bin",
    "load_idx",
    "population_sparsity",
    "rand_uniform",
    "read_csv",
    "recon_loss",
    "sgd_step",
    "sparsity_loss",
    "synth_shapes",
    "tensor_new",
    "total_loss",
    "train",
    "write_csv",
]
