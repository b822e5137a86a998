"""Model assembly: plain convolutional autoencoder (cae) and the structured
sparse variant (sscae) that inserts the two-stage l2 normalization between
encoder and decoder and adds the l1 map penalty to the objective.

Pipeline: valid conv -> [max pool] -> nonlinearity -> [normalize across
maps -> normalize per map] -> [unpool] -> full conv -> output nonlinearity.
Pooling switches recorded by the encoder are reused by the decoder's
unpooling.  With nonlinearity 'relu' the output nonlinearity is the
identity so negative pre-activations can still lower their pixels;
'sigmoid' decodes through a sigmoid, matching inputs scaled to [0, 1].
"""

import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import layers, loss
from .errors import ShapeMismatchError
from .layers import ConvParams
from .rng import Rng
from .tensor import assert_finite, dtype_of, rand_uniform

VARIANTS = ("cae", "sscae")
NONLINEARITIES = ("sigmoid", "relu")
NORM_ORDERS = ("across_then_per", "per_then_across")


def _debug_checks():
    return os.environ.get("SSCAE_DEBUG", "0").lower() not in ("0", "", "false")


@dataclass
class ModelConfig:
    variant: str = "sscae"
    n_filters: int = 16
    kernel: tuple = (5, 5)
    in_channels: int = 1
    input_dims: tuple = (28, 28)
    nonlinearity: str = "sigmoid"
    pooling: tuple | None = None
    lam: float = 0.1
    norm_order: str = "across_then_per"
    eps: float = layers.DEFAULT_EPS
    precision: str = "fp64"
    seed: int = 0
    bypass_normalization: bool = False
    squared_recon: bool = False

    def validate(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"nonlinearity must be one of {NONLINEARITIES}")
        if self.norm_order not in NORM_ORDERS:
            raise ValueError(f"norm_order must be one of {NORM_ORDERS}")
        if self.n_filters < 1 or self.in_channels < 1:
            raise ValueError("n_filters and in_channels must be positive")
        kh, kw = self.kernel
        h, w = self.input_dims
        if kh < 1 or kw < 1 or kh > h or kw > w:
            raise ValueError(f"kernel {self.kernel} incompatible with input dims {self.input_dims}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        dtype_of(self.precision)
        if self.pooling is not None:
            ph, pw = self.pooling
            ch, cw = self.conv_out_dims
            if ph < 1 or pw < 1 or ch % ph or cw % pw:
                raise ValueError(
                    f"pooling {self.pooling} does not divide featuremap dims {self.conv_out_dims}"
                )

    @property
    def conv_out_dims(self):
        return (self.input_dims[0] - self.kernel[0] + 1, self.input_dims[1] - self.kernel[1] + 1)

    @property
    def featuremap_dims(self):
        """Spatial dims of the (possibly pooled) featuremaps."""
        ch, cw = self.conv_out_dims
        if self.pooling is None:
            return (ch, cw)
        return (ch // self.pooling[0], cw // self.pooling[1])

    @property
    def decoder_nonlinearity(self):
        return "sigmoid" if self.nonlinearity == "sigmoid" else "identity"

    @property
    def normalization_active(self):
        return self.variant == "sscae" and not self.bypass_normalization

    @property
    def sparsity_active(self):
        return self.variant == "sscae" and self.lam > 0

    @property
    def dtype(self):
        return dtype_of(self.precision)


@dataclass
class ModelState:
    encoder: ConvParams
    decoder: ConvParams

    def params(self):
        """Named parameter arrays in a fixed order."""
        return {
            "encoder.weights": self.encoder.weights,
            "encoder.bias": self.encoder.bias,
            "decoder.weights": self.decoder.weights,
            "decoder.bias": self.decoder.bias,
        }

    def set_params(self, values):
        self.encoder.weights = values["encoder.weights"]
        self.encoder.bias = values["encoder.bias"]
        self.decoder.weights = values["decoder.weights"]
        self.decoder.bias = values["decoder.bias"]


@dataclass
class ForwardPass:
    """Per-forward tapes and intermediates consumed by backward and metrics."""

    x_rec: np.ndarray
    featuremaps: np.ndarray
    conv_tape: object
    act_tape: object
    dec_tape: object
    dec_act_tape: object
    norm_tapes: list
    switches: object
    conv_shape: tuple


def build(config: ModelConfig) -> ModelState:
    """Initialize parameters: uniform +-1/sqrt(fan_in) weights, zero biases."""
    config.validate()
    k, c = config.n_filters, config.in_channels
    kh, kw = config.kernel
    rng = Rng(config.seed)
    enc_bound = 1.0 / np.sqrt(c * kh * kw)
    dec_bound = 1.0 / np.sqrt(k * kh * kw)
    dtype = config.dtype
    encoder = ConvParams(
        weights=rand_uniform((k, c, kh, kw), enc_bound, rng, config.precision),
        bias=np.zeros(k, dtype=dtype),
    )
    decoder = ConvParams(
        weights=rand_uniform((k, c, kh, kw), dec_bound, rng, config.precision),
        bias=np.zeros(c, dtype=dtype),
    )
    return ModelState(encoder=encoder, decoder=decoder)


def forward(state: ModelState, x, config: ModelConfig, check_finite=None) -> ForwardPass:
    """Run the full pipeline; returns reconstruction, featuremaps, and tapes."""
    if check_finite is None:
        check_finite = _debug_checks()
    if x.ndim != 4 or x.shape[1] != config.in_channels or x.shape[2:] != tuple(config.input_dims):
        raise ShapeMismatchError(
            f"input shape {x.shape} does not match configured "
            f"[{config.in_channels}, {config.input_dims[0]}, {config.input_dims[1]}] images"
        )
    x = np.ascontiguousarray(x, dtype=config.dtype)

    def _chk(name, arr):
        if check_finite:
            assert_finite(name, arr)

    z1, conv_tape = layers.conv_valid_forward(x, state.encoder)
    _chk("encoder.conv", z1)
    if config.pooling is not None:
        p1, switches = layers.maxpool_forward(z1, config.pooling)
        _chk("encoder.pool", p1)
    else:
        p1, switches = z1, None
    a1, act_tape = layers.activation_forward(p1, config.nonlinearity)
    _chk("encoder.activation", a1)

    norm_tapes = []
    h = a1
    if config.normalization_active:
        if config.norm_order == "across_then_per":
            h, t1 = layers.normalize_across_maps(h, config.eps)
            _chk("normalize.across", h)
            h, t2 = layers.normalize_per_map(h, config.eps)
            _chk("normalize.per", h)
        else:
            h, t1 = layers.normalize_per_map(h, config.eps)
            _chk("normalize.per", h)
            h, t2 = layers.normalize_across_maps(h, config.eps)
            _chk("normalize.across", h)
        norm_tapes = [t1, t2]

    if config.pooling is not None:
        u = layers.unpool_forward(h, switches, z1.shape)
        _chk("decoder.unpool", u)
    else:
        u = h
    z2, dec_tape = layers.conv_full_forward(u, state.decoder)
    _chk("decoder.conv", z2)
    x_rec, dec_act_tape = layers.activation_forward(z2, config.decoder_nonlinearity)
    _chk("decoder.activation", x_rec)

    return ForwardPass(
        x_rec=x_rec,
        featuremaps=h,
        conv_tape=conv_tape,
        act_tape=act_tape,
        dec_tape=dec_tape,
        dec_act_tape=dec_act_tape,
        norm_tapes=norm_tapes,
        switches=switches,
        conv_shape=z1.shape,
    )


def backward(state: ModelState, x, fwd: ForwardPass, config: ModelConfig):
    """Gradients of the training objective w.r.t. all parameters.

    Returns (grads dict keyed like ModelState.params(), LossBreakdown).
    The l1 sparsity gradient joins the reconstruction gradient at the
    normalized featuremaps, so both flow through the normalization backward.
    """
    x = np.ascontiguousarray(x, dtype=config.dtype)
    rec, grad_xrec = loss.recon_loss(x, fwd.x_rec, squared=config.squared_recon)

    if config.variant == "sscae":
        sp, sp_grad = loss.sparsity_loss(fwd.featuremaps)
        lam = config.lam
    else:
        sp, sp_grad, lam = 0.0, None, 0.0
    breakdown = loss.LossBreakdown(l2rec=rec, l1sp=sp, total=loss.total_loss(rec, sp, lam), lam=lam)

    g = layers.activation_backward(grad_xrec, fwd.dec_act_tape)
    g, grad_dec_w, grad_dec_b = layers.conv_full_backward(g, fwd.dec_tape)
    if config.pooling is not None:
        g = layers.unpool_backward(g, fwd.switches)
    if config.sparsity_active:
        g = g + lam * sp_grad
    if config.normalization_active:
        g = layers.normalize_backward(g, fwd.norm_tapes[1])
        g = layers.normalize_backward(g, fwd.norm_tapes[0])
    g = layers.activation_backward(g, fwd.act_tape)
    if config.pooling is not None:
        g = layers.maxpool_backward(g, fwd.switches, fwd.conv_shape)
    _, grad_enc_w, grad_enc_b = layers.conv_valid_backward(g, fwd.conv_tape)

    grads = {
        "encoder.weights": grad_enc_w,
        "encoder.bias": grad_enc_b,
        "decoder.weights": grad_dec_w,
        "decoder.bias": grad_dec_b,
    }
    return grads, breakdown


def objective(state: ModelState, x, config: ModelConfig) -> float:
    """Scalar training objective (forward only); used by the gradient checker."""
    fwd = forward(state, x, config, check_finite=False)
    rec, _ = loss.recon_loss(
        np.ascontiguousarray(x, dtype=config.dtype), fwd.x_rec, squared=config.squared_recon
    )
    if config.variant == "sscae":
        sp, _ = loss.sparsity_loss(fwd.featuremaps)
        return loss.total_loss(rec, sp, config.lam)
    return rec


# --- finite-difference gradient checking ---------------------------------

FD_STEP = 1e-5
KINK_MARGIN = 1e-4


@dataclass
class GradCheckReport:
    """Per-parameter-group worst relative errors over all trials."""

    tol: float
    n_trials: int
    worst: dict = field(default_factory=dict)

    @property
    def max_error(self):
        return max(self.worst.values()) if self.worst else 0.0

    @property
    def passed(self):
        return self.max_error < self.tol

    def lines(self):
        out = [f"gradient check: {self.n_trials} trials, tol {self.tol:g}"]
        for name, err in sorted(self.worst.items(), key=lambda kv: -kv[1]):
            flag = "ok " if err < self.tol else "FAIL"
            out.append(f"  [{flag}] {name:<18} max rel err {err:.3e}")
        return out


def _near_kink(state, x, config):
    """True when the instance sits near a relu or max-pool kink.

    Finite differences are unreliable within KINK_MARGIN of a kink, so such
    instances are resampled.
    """
    z1, _ = layers.conv_valid_forward(x, state.encoder)
    if config.pooling is not None:
        ph, pw = config.pooling
        n, k, h, w = z1.shape
        tiles = z1.reshape(n, k, h // ph, ph, w // pw, pw).transpose(0, 1, 2, 4, 3, 5)
        flat = np.sort(tiles.reshape(n, k, h // ph, w // pw, ph * pw), axis=-1)
        if ph * pw > 1 and (flat[..., -1] - flat[..., -2]).min() < KINK_MARGIN:
            return True
        p1, _ = layers.maxpool_forward(z1, config.pooling)
    else:
        p1 = z1
    if config.nonlinearity == "relu" and np.abs(p1).min() < KINK_MARGIN:
        return True
    return False


def _random_instance(config, rng, batch=1, max_resample=200):
    """A (state, x) pair sampled away from nonsmooth points of the objective."""
    for _ in range(max_resample):
        state = build(replace(config, seed=int(rng._next_words(1)[0])))
        dims = (batch, config.in_channels, *config.input_dims)
        x = rng.uniform01(int(np.prod(dims))).reshape(dims).astype(config.dtype)
        if not _near_kink(state, x, config):
            return state, x
    raise RuntimeError("could not sample an instance away from relu/max kinks")


def relative_error(a, b, floor=1e-12):
    """Norm-based relative difference between two gradient arrays."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / denom)


def grad_check(config: ModelConfig, n_trials=20, tol=1e-4, step=FD_STEP, seed=1234):
    """Compare analytic parameter gradients against central finite differences.

    fp64 only; failures are reported per parameter group, not raised.
    """
    if config.precision != "fp64":
        raise ValueError("gradient checking requires fp64 precision")
    config.validate()
    rng = Rng(seed)
    report = GradCheckReport(tol=tol, n_trials=n_trials)
    for _ in range(n_trials):
        state, x = _random_instance(config, rng)
        fwd = forward(state, x, config, check_finite=False)
        grads, _ = backward(state, x, fwd, config)
        for name, param in state.params().items():
            numeric = np.empty_like(param)
            flat = param.ravel()
            num_flat = numeric.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                f_plus = objective(state, x, config)
                flat[i] = orig - step
                f_minus = objective(state, x, config)
                flat[i] = orig
                num_flat[i] = (f_plus - f_minus) / (2 * step)
            err = relative_error(grads[name], numeric)
            if err > report.worst.get(name, 0.0):
                report.worst[name] = err
    return report
