"""Dataset ingestion: IDX image files (MNIST layout, gzip-transparent),
CIFAR-10 binary batches, and a deterministic synthetic shapes generator.

The only transform anywhere is pixel scaling to [0, 1]; no whitening or
mean subtraction.
"""

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError
from .rng import Rng

IDX_IMAGES_MAGIC = 0x00000803
GZIP_MAGIC = b"\x1f\x8b"
CIFAR_RECORD_BYTES = 3073  # 1 label byte + 3 channel planes of 32*32


@dataclass
class Dataset:
    """Images [N, C, H, W] scaled to [0, 1] plus a provenance tag."""

    images: np.ndarray
    source: str

    def __len__(self):
        return self.images.shape[0]


def _read_bytes(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == GZIP_MAGIC:
        raw = gzip.decompress(raw)
    return raw


def load_idx(path):
    """Parse an IDX unsigned-byte rank-3 image file (big-endian header)."""
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise DataFormatError(f"IDX header needs 16 bytes, file has {len(raw)}")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic != IDX_IMAGES_MAGIC:
        if magic >> 16 == 0:
            raise DataFormatError(
                f"wrong IDX rank/type: magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x} "
                "(unsigned-byte rank-3 images)"
            )
        raise DataFormatError(f"not an IDX file: bad magic 0x{magic:08x}")
    n, h, w = struct.unpack(">III", raw[4:16])
    if max(n, h, w) > 2**31 or n * h * w > 2**40:
        raise DataFormatError(f"IDX dimensions overflow sane limits: {n}x{h}x{w}")
    expected = n * h * w
    actual = len(raw) - 16
    if actual != expected:
        raise DataFormatError(
            f"IDX payload size mismatch: expected {expected} bytes for {n}x{h}x{w}, got {actual}"
        )
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(n, 1, h, w)
    return Dataset(images=pixels.astype(np.float32) / 255.0, source="idx")


def save_idx(dataset, path):
    """Re-serialize a dataset to IDX bytes; inverse of load_idx for 1-channel data."""
    images = dataset.images
    if images.shape[1] != 1:
        raise DataFormatError("IDX rank-3 layout holds single-channel images only")
    n, _, h, w = images.shape
    pixels = np.round(images[:, 0] * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, h, w))
        fh.write(pixels.tobytes())


def load_cifar10_bin(path):
    """Parse a CIFAR-10 binary batch: 3073-byte records, channel-major pixels."""
    raw = _read_bytes(path)
    if len(raw) == 0 or len(raw) % CIFAR_RECORD_BYTES:
        raise DataFormatError(
            f"CIFAR-10 batch size {len(raw)} is not a positive multiple of {CIFAR_RECORD_BYTES}"
        )
    n = len(raw) // CIFAR_RECORD_BYTES
    records = np.frombuffer(raw, dtype=np.uint8).reshape(n, CIFAR_RECORD_BYTES)
    pixels = records[:, 1:].reshape(n, 3, 32, 32)  # label byte ignored
    return Dataset(images=pixels.astype(np.float32) / 255.0, source="cifar")


def synth_shapes(n, dims, seed):
    """n binary images of randomly placed bars, corners, and crosses.

    Strokes are 1-2 pixels wide; pixel values are exactly 0.0 or 1.0.
    Deterministic under seed via the package Rng.
    """
    h, w = dims
    if h < 8 or w < 8:
        raise ValueError(f"dims must be at least 8x8, got {dims}")
    rng = Rng(seed)
    images = np.zeros((n, 1, h, w), dtype=np.float32)
    for i in range(n):
        canvas = images[i, 0]
        n_shapes = 1 + int(rng.integers(1, 2)[0])
        for _ in range(n_shapes):
            kind = int(rng.integers(1, 4)[0])
            width = 1 + int(rng.integers(1, 2)[0] == 0)  # width 2 with prob 1/2
            if kind == 0:  # horizontal bar
                r = int(rng.integers(1, h - width + 1)[0])
                canvas[r : r + width, :] = 1.0
            elif kind == 1:  # vertical bar
                c = int(rng.integers(1, w - width + 1)[0])
                canvas[:, c : c + width] = 1.0
            elif kind == 2:  # cross
                r = int(rng.integers(1, h - width + 1)[0])
                c = int(rng.integers(1, w - width + 1)[0])
                canvas[r : r + width, :] = 1.0
                canvas[:, c : c + width] = 1.0
            else:  # corner: two half-length arms meeting at a point
                r = int(rng.integers(1, h // 2)[0])
                c = int(rng.integers(1, w // 2)[0])
                arm_h = h // 2
                arm_w = w // 2
                canvas[r : r + width, c : c + arm_w] = 1.0
                canvas[r : r + arm_h, c : c + width] = 1.0
    return Dataset(images=images, source="synthetic")
