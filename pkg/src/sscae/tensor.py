"""Rank-4 tensor helpers on top of numpy.

Tensors are plain C-contiguous ``np.ndarray`` values with layout
(batch, channel, row, col) and dtype float32 or float64.  Element
(b, c, i, j) therefore lives at flat index ((b*C + c)*H + i)*W + j.
float64 is the working precision for tests and gradient checks; float32
is opt-in for training speed.
"""

import numpy as np

from .errors import NonFiniteError, ShapeMismatchError

PRECISIONS = {"fp32": np.float32, "fp64": np.float64}


def dtype_of(precision):
    """Map a precision name ('fp32'/'fp64') to its numpy dtype."""
    try:
        return PRECISIONS[precision]
    except KeyError:
        raise ValueError(f"unknown precision {precision!r}; expected fp32 or fp64")


def tensor_new(shape, fill=0.0, precision="fp64"):
    """Dense rank-4 tensor of the given shape, every element equal to fill."""
    shape = tuple(int(s) for s in shape)
    if len(shape) != 4 or any(s < 0 for s in shape):
        raise ShapeMismatchError(f"expected 4 nonnegative dims, got {shape}")
    return np.full(shape, fill, dtype=dtype_of(precision))


def rand_uniform(shape, bound, rng, precision="fp64"):
    """Tensor with i.i.d. entries uniform on [-bound, +bound].

    Draws come from the package Rng (SplitMix64), so equal seeds give
    bit-identical tensors on every platform.
    """
    if bound <= 0:
        raise ValueError(f"bound must be positive, got {bound}")
    shape = tuple(int(s) for s in shape)
    if any(s < 0 for s in shape):
        raise ShapeMismatchError(f"negative dim in {shape}")
    n = int(np.prod(shape)) if shape else 1
    values = rng.uniform(n, -bound, bound)
    return values.reshape(shape).astype(dtype_of(precision))


def inner_product(a, b):
    """Sum over all positions of a*b; shapes must match exactly."""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"inner_product shapes differ: {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def assert_finite(name, arr):
    """Raise NonFiniteError naming ``name`` if arr holds any NaN/Inf."""
    if not np.isfinite(arr).all():
        raise NonFiniteError(name)
