"""Objectives: l2 reconstruction distance, averaged l1 map sparsity, and
their weighted sum."""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError

RECON_EPS = 1e-12


@dataclass
class LossBreakdown:
    l2rec: float
    l1sp: float
    total: float
    lam: float


def recon_loss(x, x_rec, squared=False, eps=RECON_EPS):
    """Per-item l2 distance ||x - x_rec||_2, averaged over the batch.

    Returns (value, gradient w.r.t. x_rec).  With squared=True the per-item
    term is the squared distance instead (common in other autoencoder
    codebases); the default is the plain norm, whose gradient singularity at
    perfect reconstruction is eps-guarded.
    """
    if x.shape != x_rec.shape:
        raise ShapeMismatchError(f"recon shapes differ: {x.shape} vs {x_rec.shape}")
    nb = x.shape[0]
    diff = x_rec - x
    sq = (diff * diff).reshape(nb, -1).sum(axis=1)
    if squared:
        value = float(sq.mean())
        grad = diff * (2.0 / nb)
        return value, grad
    per_item = np.sqrt(sq)
    value = float(per_item.mean())
    denom = np.maximum(per_item, eps) * nb
    grad = diff / denom[:, None, None, None]
    return value, grad


def sparsity_loss(h):
    """Mean per-map l1 norm over batch items and maps.

    Returns (value, gradient): grad[b,k,i,j] = sign(h[b,k,i,j]) / (m*n)
    with sign(0) = 0, the subgradient that keeps exact zeros fixed.
    """
    m, n = h.shape[0], h.shape[1]
    scale = 1.0 / (m * n)
    value = float(np.abs(h).sum() * scale)
    grad = np.sign(h) * scale
    return value, grad


def total_loss(rec, sp, lam):
    """rec + lam * sp."""
    if lam < 0:
        raise ValueError(f"sparsity weight must be nonnegative, got {lam}")
    return rec + lam * sp
