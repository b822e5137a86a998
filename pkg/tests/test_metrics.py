import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sscae import layers
from sscae.metrics import (
    TrainReport,
    activity_uniformity,
    delta_filter_count,
    delta_filter_score,
    hoyer_sparseness,
    mean_map_hoyer,
    population_sparsity,
    read_csv,
    write_csv,
)
from sscae.rng import Rng


class TestDeltaFilterScore:
    def test_one_hot_is_pure_delta(self):
        w = np.zeros((1, 5, 5))
        w[0, 2, 2] = 0.7
        assert delta_filter_score(w) == 1.0

    def test_constant_filter_is_maximally_spread(self):
        assert delta_filter_score(np.full((1, 5, 5), 0.3)) == pytest.approx(1 / 25)

    def test_direct_formula_evaluation(self):
        w = np.full(25, 0.1)
        w[0] = 0.9
        expected = 0.81 / (0.81 + 24 * 0.01)
        assert delta_filter_score(w) == pytest.approx(expected)

    def test_zero_filter_is_dead(self):
        assert delta_filter_score(np.zeros((2, 3, 3))) == 1.0

    def test_scale_invariance(self):
        w = Rng(1).uniform(27, -1, 1).reshape(3, 3, 3)
        for alpha in (-2.0, 0.5, 100.0):
            assert delta_filter_score(alpha * w) == pytest.approx(delta_filter_score(w))

    def test_count_over_bank(self):
        bank = np.full((3, 1, 3, 3), 0.2)
        bank[0] = 0.0  # dead
        bank[1, 0, 1, 1] = 50.0  # delta
        assert delta_filter_count(bank) == 2


class TestHoyerSparseness:
    def test_one_hot(self):
        v = np.zeros(16)
        v[3] = 2.5
        assert hoyer_sparseness(v) == 1.0

    def test_constant(self):
        assert hoyer_sparseness(np.full(16, -0.4)) == 0.0

    def test_direct_formula(self):
        # l1 = 7, l2 = 5, P = 4: (2 - 7/5) / (2 - 1) = 0.6
        assert hoyer_sparseness(np.array([3.0, 4.0, 0.0, 0.0])) == pytest.approx(0.6)

    def test_zero_vector_absent(self):
        assert hoyer_sparseness(np.zeros(8)) is None

    def test_needs_two_entries(self):
        with pytest.raises(ValueError):
            hoyer_sparseness(np.array([1.0]))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32), alpha=st.floats(0.01, 100.0))
    def test_scale_and_permutation_invariant(self, seed, alpha):
        rng = Rng(seed)
        v = rng.uniform(12, -1, 1)
        base = hoyer_sparseness(v)
        assert hoyer_sparseness(alpha * v) == pytest.approx(base, abs=1e-9)
        assert hoyer_sparseness(v[rng.permutation(12)]) == pytest.approx(base, abs=1e-9)

    def test_normalized_map_identity(self):
        # after per-map normalization ||map||_2 = 1, so the score reduces to
        # (sqrt(P) - l1) / (sqrt(P) - 1): smaller l1 means sparser maps
        rng = Rng(9)
        h = rng.uniform(2 * 3 * 16, -1, 1).reshape(2, 3, 4, 4)
        hn, _ = layers.normalize_per_map(h)
        p = 16
        for b in range(2):
            for k in range(3):
                v = hn[b, k].ravel()
                direct = hoyer_sparseness(v)
                via_l1 = (math.sqrt(p) - np.abs(v).sum()) / (math.sqrt(p) - 1)
                assert direct == pytest.approx(via_l1, abs=1e-9)
        assert mean_map_hoyer(hn) == pytest.approx(
            np.mean([hoyer_sparseness(hn[b, k]) for b in range(2) for k in range(3)])
        )


class TestActivityUniformity:
    def test_equal_norms_are_perfectly_uniform(self):
        h = np.zeros((1, 2, 2, 2))
        h[0, 0] = 0.6
        h[0, 1] = 0.8  # every site norm 1.0
        assert activity_uniformity(h) == 0.0

    def test_direct_computation(self):
        # site norms {1, 1, 1, 3}: std/mean = 0.866.../1.5
        h = np.zeros((1, 1, 2, 2))
        h[0, 0] = [[1.0, 1.0], [1.0, 3.0]]
        expected = np.std([1, 1, 1, 3]) / 1.5
        assert activity_uniformity(h) == pytest.approx(expected)
        assert activity_uniformity(h) == pytest.approx(0.5773502691896257)

    def test_single_active_site(self):
        h = np.zeros((1, 3, 2, 2))
        h[0, :, 0, 0] = 1.0
        assert activity_uniformity(h) == 0.0

    def test_no_active_sites_absent(self):
        assert activity_uniformity(np.zeros((1, 2, 2, 2))) is None

    def test_population_sparsity_of_one_hot_vectors(self):
        h = np.zeros((1, 4, 2, 2))
        h[0, 1] = 1.0  # each site activates exactly one of four maps
        assert population_sparsity(h) == pytest.approx(1.0)


class TestCsv:
    def _reports(self):
        return [
            TrainReport(1, 10, 0.5, 1.25, 0.625, 2, 0.51, 0.42, 0.3, 1.75),
            TrainReport(2, 20, 0.25, 1.5, 0.4, 0, 0.77, 0.5, float("nan"), 2.5e-3),
        ]

    def test_header_only_for_empty(self, tmp_path):
        path = tmp_path / "m.csv"
        write_csv([], path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("epoch,iteration,l2rec,")

    def test_row_count(self, tmp_path):
        path = tmp_path / "m.csv"
        write_csv(self._reports(), path)
        assert len(path.read_text().strip().splitlines()) == 3

    def test_round_trip_exact(self, tmp_path):
        path = tmp_path / "m.csv"
        reports = self._reports()
        write_csv(reports, path)
        parsed = read_csv(path)
        assert len(parsed) == 2
        for a, b in zip(reports, parsed):
            for field in a.__dataclass_fields__:
                va, vb = getattr(a, field), getattr(b, field)
                if isinstance(va, float) and math.isnan(va):
                    assert math.isnan(vb)
                else:
                    assert va == vb and type(va) is type(vb)

    def test_header_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("epoch,loss\n1,0.5\n")
        with pytest.raises(ValueError):
            read_csv(path)
