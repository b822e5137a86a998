"""Differentiable building blocks: convolutions, pooling, nonlinearities,
and the two-stage l2 featuremap normalization.

Every forward returns a tape caching exactly what its backward needs.  A
tape is single-use; consuming it twice raises StaleTapeError.  Convolutions
follow the convnet convention: the encoder computes a valid
cross-correlation (no kernel flip) and the decoder computes the adjoint
full convolution, so the pair satisfies the inner-product identity
<corr_valid(x, w), y> == <x, full_conv(y, w)>.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ShapeMismatchError, StaleTapeError

DEFAULT_EPS = 1e-8


@dataclass
class ConvParams:
    """Filter bank [n_filters, in_channels, k_h, k_w] plus a bias vector.

    The bias has one entry per filter on the encoder side and one per
    output image channel on the decoder side.
    """

    weights: np.ndarray
    bias: np.ndarray


@dataclass
class SwitchMap:
    """Absolute argmax coordinates recorded per pooling window."""

    rows: np.ndarray
    cols: np.ndarray
    window: tuple

    @property
    def shape(self):
        return self.rows.shape

    def validate(self):
        """Check every stored coordinate lies inside its own window."""
        ph, pw = self.window
        oh, ow = self.rows.shape[2], self.rows.shape[3]
        base_r = np.arange(oh, dtype=np.int64)[None, None, :, None] * ph
        base_c = np.arange(ow, dtype=np.int64)[None, None, None, :] * pw
        ok_r = (self.rows >= base_r) & (self.rows < base_r + ph)
        ok_c = (self.cols >= base_c) & (self.cols < base_c + pw)
        if not (ok_r.all() and ok_c.all()):
            raise ValueError("corrupt SwitchMap: coordinate outside its pooling window")


class _Tape:
    """Single-use cache of forward intermediates."""

    __slots__ = ("payload", "_used")

    def __init__(self, **payload):
        self.payload = payload
        self._used = False

    def consume(self):
        if self._used:
            raise StaleTapeError("tape already consumed by a previous backward pass")
        self._used = True
        return self.payload


# --- convolution ---------------------------------------------------------


def conv_valid_forward(x, params):
    """Valid cross-correlation plus per-filter bias."""
    w = params.weights
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeMismatchError("conv_valid expects rank-4 input and weights")
    if x.shape[1] != w.shape[1]:
        raise ShapeMismatchError(f"channel mismatch: input {x.shape[1]}, weights {w.shape[1]}")
    if x.shape[2] < w.shape[2] or x.shape[3] < w.shape[3]:
        raise ShapeMismatchError(f"kernel {w.shape[2:]} exceeds input dims {x.shape[2:]}")
    if params.bias.shape != (w.shape[0],):
        raise ShapeMismatchError("encoder bias must have one entry per filter")
    out = kernels.corr_valid(x, w, params.bias.astype(x.dtype))
    return out, _Tape(x=x, weights=w)


def conv_valid_backward(grad_out, tape):
    """Gradients of conv_valid w.r.t. input, weights, and bias."""
    cache = tape.consume()
    x, w = cache["x"], cache["weights"]
    zero = np.zeros(x.shape[1], dtype=grad_out.dtype)
    grad_x = kernels.full_conv(grad_out, w, zero)
    grad_w = kernels.corr_valid_grad_w(grad_out, x)
    grad_b = grad_out.sum(axis=(0, 2, 3))
    return grad_x, grad_w, grad_b


def conv_full_forward(h, params):
    """Full convolution summed over input maps, plus per-output-channel bias."""
    w = params.weights
    if h.shape[1] != w.shape[0]:
        raise ShapeMismatchError(f"map count mismatch: input {h.shape[1]}, weights {w.shape[0]}")
    if params.bias.shape != (w.shape[1],):
        raise ShapeMismatchError("decoder bias must have one entry per output channel")
    out = kernels.full_conv(h, w, params.bias.astype(h.dtype))
    return out, _Tape(h=h, weights=w)


def conv_full_backward(grad_out, tape):
    """Gradients of conv_full w.r.t. input maps, weights, and bias."""
    cache = tape.consume()
    h, w = cache["h"], cache["weights"]
    zero = np.zeros(w.shape[0], dtype=grad_out.dtype)
    grad_h = kernels.corr_valid(grad_out, w, zero)
    grad_w = kernels.corr_valid_grad_w(h, grad_out)
    grad_b = grad_out.sum(axis=(0, 2, 3))
    return grad_h, grad_w, grad_b


# --- pooling -------------------------------------------------------------


def maxpool_forward(x, window):
    """Non-overlapping max pool; rejects non-divisible spatial dims.

    Ties break to the first maximum in row-major scan order.
    """
    ph, pw = window
    if x.shape[2] % ph or x.shape[3] % pw:
        raise ShapeMismatchError(
            f"spatial dims {x.shape[2:]} not divisible by pooling window {window}"
        )
    pooled, rows, cols = kernels.maxpool(x, ph, pw)
    return pooled, SwitchMap(rows=rows, cols=cols, window=(ph, pw))


def maxpool_backward(grad_pooled, switches, out_shape):
    """Route pooled-output gradients back to the argmax positions."""
    return kernels.unpool(grad_pooled, switches.rows, switches.cols, out_shape[2], out_shape[3])


def unpool_forward(y, switches, out_shape):
    """Place each value at its recorded switch position, zeros elsewhere."""
    if y.shape != switches.shape:
        raise ShapeMismatchError(f"value shape {y.shape} != switch shape {switches.shape}")
    ph, pw = switches.window
    if out_shape[2] != y.shape[2] * ph or out_shape[3] != y.shape[3] * pw:
        raise ShapeMismatchError(f"out_shape {out_shape} inconsistent with window {switches.window}")
    switches.validate()
    return kernels.unpool(y, switches.rows, switches.cols, out_shape[2], out_shape[3])


def unpool_backward(grad_out, switches):
    """Gather gradients from the switch positions (adjoint of unpool)."""
    return kernels.gather(grad_out, switches.rows, switches.cols)


# --- nonlinearities ------------------------------------------------------


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def activation_forward(z, kind):
    """Elementwise nonlinearity: 'sigmoid', 'relu', or 'identity'."""
    if kind == "sigmoid":
        a = _sigmoid(z)
    elif kind == "relu":
        a = np.maximum(z, 0.0)
    elif kind == "identity":
        a = z
    else:
        raise ValueError(f"unknown activation {kind!r}")
    return a, _Tape(kind=kind, a=a, z=z)


def activation_backward(grad_a, tape):
    cache = tape.consume()
    kind = cache["kind"]
    if kind == "sigmoid":
        a = cache["a"]
        return grad_a * a * (1.0 - a)
    if kind == "relu":
        return grad_a * (cache["z"] > 0)
    return grad_a


# --- two-stage l2 normalization -----------------------------------------


def _normalize(h, axes, eps):
    """Divide each group (summed over ``axes``) by max(its l2 norm, eps)."""
    norms = np.sqrt((h * h).sum(axis=axes, keepdims=True))
    denom = np.maximum(norms, eps)
    out = h / denom
    return out, _Tape(out=out, norms=norms, axes=axes, eps=eps)


def normalize_across_maps(h, eps=DEFAULT_EPS):
    """Scale every spatial site's across-map feature vector to unit l2 norm.

    Sites whose norm falls below eps are divided by eps instead, so zero
    vectors stay zero.
    """
    if h.shape[1] < 1:
        raise ShapeMismatchError("need at least one featuremap")
    return _normalize(h, axes=(1,), eps=eps)


def normalize_per_map(h, eps=DEFAULT_EPS):
    """Scale each featuremap (per batch item) to unit l2 norm over its sites."""
    return _normalize(h, axes=(2, 3), eps=eps)


def normalize_backward(grad_out, tape):
    """Gradient through the guarded division.

    For a group v with norm r > eps the forward output is the unit vector
    v_hat = v/r and the gradient is the tangential projection
    (g - v_hat (v_hat . g)) / r.  For r <= eps the forward is v/eps, so the
    gradient passes through scaled by 1/eps.
    """
    cache = tape.consume()
    out, norms, axes, eps = cache["out"], cache["norms"], cache["axes"], cache["eps"]
    above = norms > eps
    dot = (out * grad_out).sum(axis=axes, keepdims=True)
    safe = np.maximum(norms, eps)
    tangential = (grad_out - out * dot) / safe
    return np.where(above, tangential, grad_out / eps)
