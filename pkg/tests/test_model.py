import numpy as np
import pytest

from sscae import model
from sscae.errors import ShapeMismatchError
from sscae.model import ModelConfig, build, forward, backward, grad_check
from sscae.rng import Rng


def small_config(**kw):
    base = dict(
        variant="sscae",
        n_filters=2,
        kernel=(3, 3),
        in_channels=1,
        input_dims=(6, 6),
        nonlinearity="sigmoid",
        pooling=None,
        lam=0.1,
        seed=5,
    )
    base.update(kw)
    return ModelConfig(**base)


class TestBuild:
    def test_mnist_scale_shapes(self):
        cfg = ModelConfig(n_filters=16, kernel=(5, 5), in_channels=1, input_dims=(28, 28))
        st = build(cfg)
        assert st.encoder.weights.shape == (16, 1, 5, 5)
        assert st.decoder.weights.shape == (16, 1, 5, 5)
        assert st.encoder.bias.shape == (16,) and st.decoder.bias.shape == (1,)

    def test_three_channel_shapes(self):
        cfg = ModelConfig(n_filters=8, kernel=(11, 11), in_channels=3, input_dims=(32, 32))
        st = build(cfg)
        assert st.encoder.weights.shape == (8, 3, 11, 11)
        assert st.decoder.bias.shape == (3,)

    def test_deterministic_under_seed(self):
        a, b = build(small_config()), build(small_config())
        for k in a.params():
            assert a.params()[k].tobytes() == b.params()[k].tobytes()

    def test_init_bounds_and_zero_biases(self):
        cfg = ModelConfig(n_filters=4, kernel=(5, 5), in_channels=2, input_dims=(12, 12), seed=9)
        st = build(cfg)
        assert np.abs(st.encoder.weights).max() <= 1.0 / np.sqrt(2 * 25)
        assert np.abs(st.decoder.weights).max() <= 1.0 / np.sqrt(4 * 25)
        assert not st.encoder.bias.any() and not st.decoder.bias.any()

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            build(small_config(kernel=(9, 9)))  # kernel exceeds input
        with pytest.raises(ValueError):
            build(small_config(pooling=(3, 3)))  # 4x4 maps not divisible by 3
        with pytest.raises(ValueError):
            build(small_config(variant="vae"))
        with pytest.raises(ValueError):
            build(small_config(lam=-1.0))


class TestForward:
    def test_zero_params_sigmoid_gives_half_gray(self):
        for variant in ("cae", "sscae"):
            cfg = small_config(variant=variant)
            st = build(cfg)
            for arr in st.params().values():
                arr[:] = 0.0
            x = Rng(1).uniform01(36).reshape(1, 1, 6, 6)
            fwd = forward(st, x, cfg)
            np.testing.assert_allclose(fwd.x_rec, 0.5)

    def test_output_dims_match_input_dims(self):
        for cfg in (
            small_config(),
            small_config(pooling=(2, 2)),
            small_config(input_dims=(12, 10), kernel=(5, 3), pooling=(2, 2)),
            small_config(in_channels=3, nonlinearity="relu"),
        ):
            st = build(cfg)
            x = Rng(2).uniform01(int(np.prod((2, cfg.in_channels, *cfg.input_dims)))).reshape(
                2, cfg.in_channels, *cfg.input_dims
            )
            fwd = forward(st, x, cfg)
            assert fwd.x_rec.shape == x.shape

    def test_featuremap_dims_with_pooling(self):
        cfg = ModelConfig(
            n_filters=16, kernel=(5, 5), in_channels=1, input_dims=(28, 28), pooling=(2, 2)
        )
        assert cfg.conv_out_dims == (24, 24)
        assert cfg.featuremap_dims == (12, 12)
        st = build(cfg)
        fwd = forward(st, np.zeros((1, 1, 28, 28)), cfg)
        assert fwd.featuremaps.shape == (1, 16, 12, 12)
        assert fwd.x_rec.shape == (1, 1, 28, 28)

    def test_sscae_maps_have_unit_l2_norm(self):
        cfg = small_config(n_filters=4)
        st = build(cfg)
        x = Rng(3).uniform01(2 * 36).reshape(2, 1, 6, 6)
        fwd = forward(st, x, cfg)
        norms = np.sqrt((fwd.featuremaps**2).sum(axis=(2, 3)))
        np.testing.assert_allclose(norms, 1.0, atol=1e-6)

    def test_norm_order_flag_changes_output(self):
        x = Rng(4).uniform01(36).reshape(1, 1, 6, 6)
        cfg_a = small_config()
        cfg_b = small_config(norm_order="per_then_across")
        st = build(cfg_a)
        a = forward(st, x, cfg_a).featuremaps
        b = forward(st, x, cfg_b).featuremaps
        assert not np.array_equal(a, b)

    def test_bypassed_sscae_equals_cae_bitwise(self):
        x = Rng(5).uniform01(2 * 36).reshape(2, 1, 6, 6)
        cae = small_config(variant="cae", lam=0.0)
        byp = small_config(bypass_normalization=True, lam=0.0)
        st_a, st_b = build(cae), build(byp)
        fa, fb = forward(st_a, x, cae), forward(st_b, x, byp)
        assert fa.x_rec.tobytes() == fb.x_rec.tobytes()
        assert fa.featuremaps.tobytes() == fb.featuremaps.tobytes()
        ga, la = backward(st_a, x, fa, cae)
        gb, lb = backward(st_b, x, fb, byp)
        assert la.l2rec == lb.l2rec and la.total == lb.total
        for k in ga:
            assert ga[k].tobytes() == gb[k].tobytes()

    def test_rejects_mismatched_input(self):
        cfg = small_config()
        st = build(cfg)
        with pytest.raises(ShapeMismatchError, match="6"):
            forward(st, np.zeros((1, 1, 8, 8)), cfg)


class TestBackward:
    def test_perfect_reconstruction_zero_grads(self):
        # constant 0.5 input with zero params reconstructs itself exactly
        cfg = small_config(variant="cae")
        st = build(cfg)
        for arr in st.params().values():
            arr[:] = 0.0
        x = np.full((2, 1, 6, 6), 0.5)
        fwd = forward(st, x, cfg)
        np.testing.assert_array_equal(fwd.x_rec, x)
        grads, breakdown = backward(st, x, fwd, cfg)
        assert breakdown.total == 0.0
        for g in grads.values():
            assert not g.any()

    def test_loss_breakdown_consistency(self):
        cfg = small_config()
        st = build(cfg)
        x = Rng(6).uniform01(36).reshape(1, 1, 6, 6)
        fwd = forward(st, x, cfg)
        _, breakdown = backward(st, x, fwd, cfg)
        assert breakdown.total == breakdown.l2rec + breakdown.lam * breakdown.l1sp
        assert breakdown.l1sp > 0

    def test_cae_ignores_lambda(self):
        cfg = small_config(variant="cae", lam=0.5)
        st = build(cfg)
        x = Rng(7).uniform01(36).reshape(1, 1, 6, 6)
        fwd = forward(st, x, cfg)
        _, breakdown = backward(st, x, fwd, cfg)
        assert breakdown.lam == 0.0
        assert breakdown.l1sp == 0.0
        assert breakdown.total == breakdown.l2rec


class TestGradCheck:
    def test_sscae_sigmoid_passes(self):
        report = grad_check(small_config(), n_trials=5, tol=1e-4, seed=42)
        assert report.passed, report.lines()

    def test_cae_relu_pooling_passes(self):
        cfg = small_config(variant="cae", nonlinearity="relu", pooling=(2, 2))
        report = grad_check(cfg, n_trials=5, tol=1e-4, seed=43)
        assert report.passed, report.lines()

    def test_degenerate_tolerance_fails_everything(self):
        report = grad_check(small_config(), n_trials=2, tol=0.0, seed=44)
        assert not report.passed
        assert all(err > 0.0 for err in report.worst.values())

    def test_fp32_rejected(self):
        with pytest.raises(ValueError):
            grad_check(small_config(precision="fp32"), n_trials=1)

    def test_report_lists_all_param_groups(self):
        report = grad_check(small_config(), n_trials=2, seed=45)
        assert set(report.worst) == {
            "encoder.weights",
            "encoder.bias",
            "decoder.weights",
            "decoder.bias",
        }
        assert len(report.lines()) == 5
