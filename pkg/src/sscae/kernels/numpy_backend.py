"""Pure-numpy kernel implementations (fallback path).

Each convolution is expressed as a loop over the kh*kw kernel offsets with a
vectorized channel contraction per offset; this keeps peak memory at one
output-sized temporary and gives a fixed, deterministic summation order.
"""

import numpy as np

NAME = "numpy"


def corr_valid(x, w, bias):
    """Valid cross-correlation: out[b,k,i,j] = bias[k] + sum_cuv x[b,c,i+u,j+v]*w[k,c,u,v]."""
    n, c, h, width = x.shape
    k, _, kh, kw = w.shape
    oh, ow = h - kh + 1, width - kw + 1
    out = np.empty((n, k, oh, ow), dtype=x.dtype)
    out[:] = bias[None, :, None, None]
    for u in range(kh):
        for v in range(kw):
            # [n,c,oh,ow] x [k,c] -> [n,k,oh,ow]
            out += np.einsum("bcij,kc->bkij", x[:, :, u : u + oh, v : v + ow], w[:, :, u, v])
    return out


def corr_valid_grad_w(gout, x):
    """Weight gradient of corr_valid: gw[k,c,u,v] = sum_bij gout[b,k,i,j]*x[b,c,i+u,j+v]."""
    n, k, oh, ow = gout.shape
    _, c, h, width = x.shape
    kh, kw = h - oh + 1, width - ow + 1
    gw = np.empty((k, c, kh, kw), dtype=gout.dtype)
    for u in range(kh):
        for v in range(kw):
            gw[:, :, u, v] = np.einsum("bkij,bcij->kc", gout, x[:, :, u : u + oh, v : v + ow])
    return gw


def full_conv(y, w, bias):
    """Full convolution, the adjoint of corr_valid in its input argument.

    out[b,c,h,t] = bias[c] + sum_kuv y[b,k,h-u,t-v]*w[k,c,u,v], indices kept
    in range; output spatial dims grow by kernel-1.
    """
    n, k, ih, iw = y.shape
    _, c, kh, kw = w.shape
    oh, ow = ih + kh - 1, iw + kw - 1
    out = np.empty((n, c, oh, ow), dtype=y.dtype)
    out[:] = bias[None, :, None, None]
    for u in range(kh):
        for v in range(kw):
            out[:, :, u : u + ih, v : v + iw] += np.einsum("bkij,kc->bcij", y, w[:, :, u, v])
    return out


def maxpool(x, ph, pw):
    """Non-overlapping max pool; returns (pooled, argmax rows, argmax cols).

    Ties go to the first maximum in row-major scan order; the returned
    coordinates are absolute positions in the pre-pooled map.
    """
    n, k, h, w = x.shape
    oh, ow = h // ph, w // pw
    tiles = x.reshape(n, k, oh, ph, ow, pw).transpose(0, 1, 2, 4, 3, 5)
    flat = tiles.reshape(n, k, oh, ow, ph * pw)
    arg = flat.argmax(axis=-1)  # first max wins, matching row-major tie rule
    pooled = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    rows = (arg // pw).astype(np.int64)
    cols = (arg % pw).astype(np.int64)
    oi = np.arange(oh, dtype=np.int64)[None, None, :, None]
    oj = np.arange(ow, dtype=np.int64)[None, None, None, :]
    return pooled, rows + oi * ph, cols + oj * pw


def unpool(y, rows, cols, h, w):
    """Scatter each pooled value back to its recorded argmax position."""
    n, k, oh, ow = y.shape
    out = np.zeros((n, k, h, w), dtype=y.dtype)
    bi = np.arange(n)[:, None, None, None]
    ki = np.arange(k)[None, :, None, None]
    out[bi, ki, rows, cols] = y
    return out


def gather(x, rows, cols):
    """Read x at the recorded switch positions (adjoint of unpool)."""
    n, k = x.shape[:2]
    bi = np.arange(n)[:, None, None, None]
    ki = np.arange(k)[None, :, None, None]
    return x[bi, ki, rows, cols]
