"""Checkpoint container: magic, little-endian u32 header length, a textual
key=value header (full model config + tensor manifest), then raw
little-endian tensor payloads in manifest order.

The header is plain text so a checkpoint can be inspected with `strings` or
a hex dump; floats are serialized with repr so save -> load -> save is
byte-identical.
"""

import struct

import numpy as np

from .errors import CheckpointError
from .layers import ConvParams
from .model import ModelConfig, ModelState

MAGIC = b"SSCAE001"
_DTYPE_CODES = {"fp32": "<f4", "fp64": "<f8"}

_TENSOR_ORDER = ("encoder.weights", "encoder.bias", "decoder.weights", "decoder.bias")


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def _config_lines(config: ModelConfig):
    return [
        f"config.variant={config.variant}",
        f"config.n_filters={config.n_filters}",
        f"config.kernel={_fmt(config.kernel)}",
        f"config.in_channels={config.in_channels}",
        f"config.input_dims={_fmt(config.input_dims)}",
        f"config.nonlinearity={config.nonlinearity}",
        f"config.pooling={_fmt(config.pooling)}",
        f"config.lambda={_fmt(float(config.lam))}",
        f"config.norm_order={config.norm_order}",
        f"config.eps={_fmt(float(config.eps))}",
        f"config.precision={config.precision}",
        f"config.seed={config.seed}",
        f"config.bypass_normalization={_fmt(config.bypass_normalization)}",
        f"config.squared_recon={_fmt(config.squared_recon)}",
    ]


def save(state: ModelState, config: ModelConfig, path):
    """Write a checkpoint; bit-exact round trip with load()."""
    params = state.params()
    lines = _config_lines(config)
    lines.append(f"tensor.count={len(_TENSOR_ORDER)}")
    payloads = []
    offset = 0
    for i, name in enumerate(_TENSOR_ORDER):
        arr = params[name]
        code = _DTYPE_CODES[config.precision]
        blob = np.ascontiguousarray(arr, dtype=code).tobytes()
        lines.append(f"tensor.{i}.name={name}")
        lines.append(f"tensor.{i}.shape={_fmt(arr.shape)}")
        lines.append(f"tensor.{i}.precision={config.precision}")
        lines.append(f"tensor.{i}.offset={offset}")
        payloads.append(blob)
        offset += len(blob)
    header = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for blob in payloads:
            fh.write(blob)


def _parse_tuple(text, n=None):
    if text == "none":
        return None
    parts = tuple(int(t) for t in text.split(","))
    if n is not None and len(parts) != n:
        raise CheckpointError(f"expected {n} comma-separated ints, got {text!r}")
    return parts


def load(path):
    """Read a checkpoint; returns (ModelState, ModelConfig)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {raw[:8]!r}")
    if len(raw) < 12:
        raise CheckpointError("checkpoint truncated before header length")
    header_len = struct.unpack("<I", raw[8:12])[0]
    header_end = 12 + header_len
    if len(raw) < header_end:
        raise CheckpointError("checkpoint truncated inside header")
    try:
        kv = {}
        for line in raw[12:header_end].decode("utf-8").splitlines():
            if line:
                key, _, value = line.partition("=")
                kv[key] = value
        config = ModelConfig(
            variant=kv["config.variant"],
            n_filters=int(kv["config.n_filters"]),
            kernel=_parse_tuple(kv["config.kernel"], 2),
            in_channels=int(kv["config.in_channels"]),
            input_dims=_parse_tuple(kv["config.input_dims"], 2),
            nonlinearity=kv["config.nonlinearity"],
            pooling=_parse_tuple(kv["config.pooling"]),
            lam=float(kv["config.lambda"]),
            norm_order=kv["config.norm_order"],
            eps=float(kv["config.eps"]),
            precision=kv["config.precision"],
            seed=int(kv["config.seed"]),
            bypass_normalization=kv["config.bypass_normalization"] == "1",
            squared_recon=kv["config.squared_recon"] == "1",
        )
        count = int(kv["tensor.count"])
        payload = raw[header_end:]
        arrays = {}
        for i in range(count):
            name = kv[f"tensor.{i}.name"]
            shape = _parse_tuple(kv[f"tensor.{i}.shape"]) or ()
            precision = kv[f"tensor.{i}.precision"]
            offset = int(kv[f"tensor.{i}.offset"])
            code = _DTYPE_CODES[precision]
            nbytes = int(np.prod(shape)) * np.dtype(code).itemsize
            if offset + nbytes > len(payload):
                raise CheckpointError(f"tensor {name} overruns checkpoint payload")
            arrays[name] = (
                np.frombuffer(payload, dtype=code, count=int(np.prod(shape)), offset=offset)
                .reshape(shape)
                .copy()
            )
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint header: {exc}") from exc
    missing = [n for n in _TENSOR_ORDER if n not in arrays]
    if missing:
        raise CheckpointError(f"checkpoint missing tensors: {missing}")
    state = ModelState(
        encoder=ConvParams(weights=arrays["encoder.weights"], bias=arrays["encoder.bias"]),
        decoder=ConvParams(weights=arrays["decoder.weights"], bias=arrays["decoder.bias"]),
    )
    return state, config
