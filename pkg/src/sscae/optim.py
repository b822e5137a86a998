"""SGD with momentum, deterministic minibatching, and the epoch loop."""

import time
from dataclasses import dataclass

import numpy as np

from . import metrics, model
from .errors import DivergenceError, NonFiniteError, ShapeMismatchError
from .rng import Rng


@dataclass
class OptimConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    epochs: int = 20
    shuffle_seed: int = 1

    def validate(self, dataset_size):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1 or self.batch_size > dataset_size:
            raise ValueError(
                f"batch_size {self.batch_size} must be in [1, dataset size {dataset_size}]"
            )
        if self.epochs < 1:
            raise ValueError("epochs must be positive")


def sgd_step(params, grads, velocity, cfg: OptimConfig):
    """v <- momentum*v - lr*g; p <- p + v, applied to every parameter tensor.

    Updates params and velocity in place; returns them for chaining.
    """
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatchError(f"gradient shape {g.shape} != param shape {p.shape} ({name})")
        v = velocity[name]
        v *= cfg.momentum
        v -= cfg.learning_rate * g
        p += v
    return params, velocity


def _diagnose_nan(state, x, config):
    """Rerun the offending batch with per-stage checks to name the first bad stage."""
    try:
        model.forward(state, x, config, check_finite=True)
    except NonFiniteError as exc:
        return exc.stage
    return "loss"


def train(state, dataset, optim_cfg: OptimConfig, model_cfg: model.ModelConfig, probe_size=256,
          log=None):
    """Run the epoch loop; returns (state, list of per-epoch TrainReports).

    Every epoch visits each sample exactly once in a shuffled order drawn
    from the dedicated shuffle stream, so fixed seeds give identical loss
    trajectories across runs.  Epoch-end activation metrics are computed on
    a fixed probe slice (the first ``probe_size`` images).
    """
    images = np.ascontiguousarray(dataset.images, dtype=model_cfg.dtype)
    n = images.shape[0]
    optim_cfg.validate(n)
    shuffle_rng = Rng(optim_cfg.shuffle_seed)
    velocity = {k: np.zeros_like(v) for k, v in state.params().items()}
    probe = images[: min(probe_size, n)]

    reports = []
    iteration = 0
    for epoch in range(1, optim_cfg.epochs + 1):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(n)
        sums = {"l2rec": 0.0, "l1sp": 0.0, "total": 0.0}
        # overflow chatter is redundant: non-finite losses abort explicitly below
        with np.errstate(over="ignore", invalid="ignore"):
            _run_epoch(state, images, order, optim_cfg, model_cfg, velocity, sums, epoch)
        iteration += -(-n // optim_cfg.batch_size)

        with np.errstate(over="ignore", invalid="ignore"):
            fmaps = model.forward(state, probe, model_cfg).featuremaps
            report = metrics.TrainReport(
                epoch=epoch,
                iteration=iteration,
                l2rec=sums["l2rec"] / n,
                l1sp=sums["l1sp"] / n,
                total=sums["total"] / n,
                delta_filter_count=metrics.delta_filter_count(state.encoder.weights),
                mean_hoyer=metrics.mean_map_hoyer(fmaps),
                population_sparsity=metrics.population_sparsity(fmaps),
                activity_uniformity=metrics.report_uniformity(fmaps, model_cfg.eps),
                wall_seconds=time.perf_counter() - t0,
            )
        reports.append(report)
        if log is not None:
            log(report)
    return state, reports


def _run_epoch(state, images, order, optim_cfg, model_cfg, velocity, sums, epoch):
    n = images.shape[0]
    for start in range(0, n, optim_cfg.batch_size):
        batch_idx = order[start : start + optim_cfg.batch_size]
        x = images[batch_idx]
        fwd = model.forward(state, x, model_cfg)
        grads, breakdown = model.backward(state, x, fwd, model_cfg)
        if not np.isfinite(breakdown.total):
            stage = _diagnose_nan(state, x, model_cfg)
            raise DivergenceError(stage, epoch, start // optim_cfg.batch_size)
        sgd_step(state.params(), grads, velocity, optim_cfg)
        bs = x.shape[0]
        sums["l2rec"] += breakdown.l2rec * bs
        sums["l1sp"] += breakdown.l1sp * bs
        sums["total"] += breakdown.total * bs
