"""Binary PGM (P5) / PPM (P6) writers for filter and featuremap export."""

import numpy as np


def to_display_bytes(arr):
    """Min-max normalize a float array to uint8 0..255; flat arrays map to 128."""
    arr = np.asarray(arr, dtype=np.float64)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.full(arr.shape, 128, dtype=np.uint8)
    return np.round((arr - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(path, gray):
    """Write one [H, W] uint8 plane as binary PGM."""
    gray = np.asarray(gray, dtype=np.uint8)
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def write_ppm(path, rgb):
    """Write one [3, H, W] uint8 image as binary PPM."""
    rgb = np.asarray(rgb, dtype=np.uint8)
    _, h, w = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.transpose(1, 2, 0).tobytes())


def read_pnm(path):
    """Parse P5/P6 files written by this module; returns (kind, array)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    kind, dims, maxval, pixels = raw.split(b"\n", 3)
    w, h = (int(t) for t in dims.split())
    assert maxval == b"255"
    if kind == b"P5":
        return "pgm", np.frombuffer(pixels, dtype=np.uint8, count=h * w).reshape(h, w)
    if kind == b"P6":
        arr = np.frombuffer(pixels, dtype=np.uint8, count=h * w * 3).reshape(h, w, 3)
        return "ppm", arr.transpose(2, 0, 1)
    raise ValueError(f"unsupported PNM kind {kind!r}")
