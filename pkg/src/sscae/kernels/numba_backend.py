"""Numba-compiled kernels (default fast path).

Plain single-threaded loops, IEEE semantics (no fastmath), so results are
deterministic and independent of thread count.  Signatures are inferred on
first call and cached on disk.
"""

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def corr_valid(x, w, bias):
    n, c, h, width = x.shape
    k, _, kh, kw = w.shape
    oh, ow = h - kh + 1, width - kw + 1
    out = np.empty((n, k, oh, ow), dtype=x.dtype)
    for b in range(n):
        for f in range(k):
            for i in range(oh):
                for j in range(ow):
                    acc = bias[f]
                    for ch in range(c):
                        for u in range(kh):
                            for v in range(kw):
                                acc += x[b, ch, i + u, j + v] * w[f, ch, u, v]
                    out[b, f, i, j] = acc
    return out


@njit(cache=True)
def corr_valid_grad_w(gout, x):
    n, k, oh, ow = gout.shape
    _, c, h, width = x.shape
    kh, kw = h - oh + 1, width - ow + 1
    gw = np.zeros((k, c, kh, kw), dtype=gout.dtype)
    for b in range(n):
        for f in range(k):
            for i in range(oh):
                for j in range(ow):
                    g = gout[b, f, i, j]
                    for ch in range(c):
                        for u in range(kh):
                            for v in range(kw):
                                gw[f, ch, u, v] += g * x[b, ch, i + u, j + v]
    return gw


@njit(cache=True)
def full_conv(y, w, bias):
    n, k, ih, iw = y.shape
    _, c, kh, kw = w.shape
    oh, ow = ih + kh - 1, iw + kw - 1
    out = np.empty((n, c, oh, ow), dtype=y.dtype)
    for b in range(n):
        for ch in range(c):
            for i in range(oh):
                for j in range(ow):
                    out[b, ch, i, j] = bias[ch]
    for b in range(n):
        for f in range(k):
            for i in range(ih):
                for j in range(iw):
                    val = y[b, f, i, j]
                    for ch in range(c):
                        for u in range(kh):
                            for v in range(kw):
                                out[b, ch, i + u, j + v] += val * w[f, ch, u, v]
    return out


@njit(cache=True)
def maxpool(x, ph, pw):
    n, k, h, w = x.shape
    oh, ow = h // ph, w // pw
    pooled = np.empty((n, k, oh, ow), dtype=x.dtype)
    rows = np.empty((n, k, oh, ow), dtype=np.int64)
    cols = np.empty((n, k, oh, ow), dtype=np.int64)
    for b in range(n):
        for f in range(k):
            for i in range(oh):
                for j in range(ow):
                    br, bc = i * ph, j * pw
                    best = x[b, f, br, bc]
                    bu, bv = 0, 0
                    for u in range(ph):
                        for v in range(pw):
                            val = x[b, f, br + u, bc + v]
                            if val > best:  # strict: first max wins
                                best = val
                                bu, bv = u, v
                    pooled[b, f, i, j] = best
                    rows[b, f, i, j] = br + bu
                    cols[b, f, i, j] = bc + bv
    return pooled, rows, cols


@njit(cache=True)
def unpool(y, rows, cols, h, w):
    n, k, oh, ow = y.shape
    out = np.zeros((n, k, h, w), dtype=y.dtype)
    for b in range(n):
        for f in range(k):
            for i in range(oh):
                for j in range(ow):
                    out[b, f, rows[b, f, i, j], cols[b, f, i, j]] = y[b, f, i, j]
    return out


@njit(cache=True)
def gather(x, rows, cols):
    n, k, oh, ow = rows.shape
    out = np.empty((n, k, oh, ow), dtype=x.dtype)
    for b in range(n):
        for f in range(k):
            for i in range(oh):
                for j in range(ow):
                    out[b, f, i, j] = x[b, f, rows[b, f, i, j], cols[b, f, i, j]]
    return out
