"""Raw difficulty, error-aware calibration, and normalization."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zpdselect.difficulty import (
    calibrate,
    calibrate_dataset,
    compute_stats,
    normalize,
    raw_difficulty,
)
from zpdselect.records import RecordSet, SampleRecord, ValidationError
from zpdselect.synth import SynthSpec, Uniform, generate_population


class TestRawDifficulty:
    def test_constant_sequence(self):
        assert raw_difficulty([-1.0, -1.0, -1.0]) == 1.0

    def test_certain_model(self):
        assert raw_difficulty([0.0, 0.0]) == 0.0

    def test_hand_mean(self):
        assert raw_difficulty([-0.5, -1.5, -2.5, -0.5]) == 1.25

    def test_empty_rejected(self):
        with pytest.raises(ValidationError, match="non-empty"):
            raw_difficulty([])

    def test_positive_entry_rejected(self):
        with pytest.raises(ValidationError, match="<= 0"):
            raw_difficulty([-1.0, 0.1])

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError, match="finite"):
            raw_difficulty([-1.0, float("-inf")])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-20, 0, allow_nan=False), min_size=1, max_size=50), st.randoms())
    def test_permutation_invariant(self, lps, rnd):
        shuffled = list(lps)
        rnd.shuffle(shuffled)
        assert raw_difficulty(shuffled) == raw_difficulty(lps)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(-20, -1e-6, allow_nan=False), min_size=1, max_size=50),
        st.floats(0.1, 10),
    )
    def test_scales_linearly(self, lps, c):
        scaled = [c * v for v in lps]
        np.testing.assert_allclose(raw_difficulty(scaled), c * raw_difficulty(lps), rtol=1e-12)

    def test_output_nonnegative(self):
        assert raw_difficulty([-3.7]) >= 0.0


class TestCalibrate:
    def test_confidently_wrong_raised_to_mean(self):
        assert calibrate(0.5, 0, 1.0) == 1.0

    def test_correct_unchanged(self):
        assert calibrate(0.5, 1, 1.0) == 0.5

    def test_already_hard_no_extra_penalty(self):
        assert calibrate(2.0, 0, 1.0) == 2.0

    @pytest.mark.parametrize("bad", [2, -1, True, 0.5])
    def test_correct_domain(self, bad):
        with pytest.raises(ValidationError, match="correct"):
            calibrate(1.0, bad, 1.0)

    def test_finite_inputs_required(self):
        with pytest.raises(ValidationError, match="finite"):
            calibrate(float("nan"), 0, 1.0)
        with pytest.raises(ValidationError, match="finite"):
            calibrate(1.0, 0, float("inf"))

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(0, 100, allow_nan=False),
        st.integers(0, 1),
        st.floats(-10, 100, allow_nan=False),
    )
    def test_never_decreases_and_matches_formula(self, raw, r, mu):
        out = calibrate(raw, r, mu)
        assert out >= raw
        np.testing.assert_allclose(out, raw + (1 - r) * max(0.0, mu - raw), rtol=1e-15, atol=0.0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 100, allow_nan=False), st.floats(-10, 100, allow_nan=False))
    def test_correct_items_are_exact_fixed_points(self, raw, mu):
        assert calibrate(raw, 1, mu) == raw

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(0, 100, allow_nan=False),
        st.integers(0, 1),
        st.floats(-10, 100, allow_nan=False),
    )
    def test_idempotent_under_frozen_mean(self, raw, r, mu):
        once = calibrate(raw, r, mu)
        assert calibrate(once, r, mu) == once

    def test_wrong_below_mean_lands_exactly_on_mean(self):
        # One third is not representable in binary, a naive a + (mu - a)
        # would round; the result must still be mu itself.
        mu = 0.1
        raw = 0.1 / 3
        assert calibrate(raw, 0, mu) == mu


class TestNormalize:
    def test_three_point_map(self):
        np.testing.assert_array_equal(normalize([1.0, 2.0, 3.0], 3.0), [-3.0, 0.0, 3.0])

    def test_degenerate_all_equal(self):
        np.testing.assert_array_equal(normalize([5.0, 5.0, 5.0], 3.0), [0.0, 0.0, 0.0])

    def test_asymmetric_interpolation(self):
        np.testing.assert_array_equal(normalize([0.0, 1.0, 4.0], 2.0), [-2.0, -1.0, 2.0])

    def test_empty_rejected(self):
        with pytest.raises(ValidationError, match="non-empty"):
            normalize([])

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError, match="finite"):
            normalize([1.0, float("nan")])

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
    def test_half_width_must_be_positive(self, bad):
        with pytest.raises(ValidationError, match="half_width"):
            normalize([1.0, 2.0], bad)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=50),
        st.floats(0.5, 10),
    )
    def test_endpoints_exact_and_range_respected(self, values, half_width):
        b = normalize(values, half_width)
        if max(values) > min(values):
            assert b[np.argmin(values)] == -half_width
            assert b[np.argmax(values)] == half_width
        assert np.all(b >= -half_width) and np.all(b <= half_width)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=50))
    def test_order_preserved(self, values):
        # The affine map is monotone; strictness additionally needs the
        # gap to be resolvable relative to the spread, otherwise both
        # values legitimately round to the same point of [-L, L].
        b = normalize(values)
        v = np.asarray(values)
        spread = float(v.max() - v.min())
        for i in range(len(values)):
            for j in range(len(values)):
                if v[i] < v[j]:
                    assert b[i] <= b[j]
                    if spread > 0 and (v[j] - v[i]) / spread > 1e-12:
                        assert b[i] < b[j]
                elif v[i] == v[j]:
                    assert b[i] == b[j]


def records_from_raw(raw_values, correct_values) -> RecordSet:
    return RecordSet(
        tuple(
            SampleRecord(id=f"r{i}", token_count=1, correct=c, raw_nll=v)
            for i, (v, c) in enumerate(zip(raw_values, correct_values))
        )
    )


class TestComputeStats:
    def test_two_point_mean(self):
        rs = records_from_raw([1.0, 3.0], [1, 1])
        assert compute_stats(rs).mu == 2.0

    def test_singleton(self):
        rs = records_from_raw([0.7], [0])
        assert compute_stats(rs).mu == 0.7

    def test_subset_mean(self):
        rs = records_from_raw([1.0, 3.0, 100.0], [1, 1, 1])
        stats = compute_stats(rs, calibration_ids={"r0", "r1"})
        assert stats.mu == 2.0
        assert stats.n_calibration == 2
        assert stats.n_records == 3

    def test_fully_unknown_subset_rejected(self):
        rs = records_from_raw([1.0], [1])
        with pytest.raises(ValidationError, match="selects no records"):
            compute_stats(rs, calibration_ids={"nope"})

    def test_partially_unknown_subset_rejected(self):
        rs = records_from_raw([1.0, 2.0], [1, 1])
        with pytest.raises(ValidationError, match="not present"):
            compute_stats(rs, calibration_ids={"r0", "nope"})

    def test_range_covers_full_set_even_with_subset_mean(self):
        rs = records_from_raw([1.0, 3.0, 10.0], [1, 1, 1])
        stats = compute_stats(rs, calibration_ids={"r0"})
        assert stats.mu == 1.0
        assert stats.min_calibrated == 1.0
        assert stats.max_calibrated == 10.0

    def test_mean_of_uniform_population(self):
        # Pseudo raw difficulty is shifted to a zero minimum, so the mean
        # of a uniform(0,2) draw stays near 1 (3 sigma ~ 0.055 at n=1000).
        spec = SynthSpec(n_items=1000, theta_star=0.0, difficulty_dist=Uniform(0.0, 2.0), seed=42)
        _, recs = generate_population(spec)
        assert abs(compute_stats(recs).mu - 1.0) < 0.06


class TestCalibrateDataset:
    def test_matches_scalar_operations_exactly(self):
        rng = np.random.default_rng(5)
        raw = rng.uniform(0, 4, 200)
        correct = rng.integers(0, 2, 200)
        rs = records_from_raw(raw, [int(c) for c in correct])
        half_width = 3.0
        items, stats = calibrate_dataset(rs, half_width)
        mu = float(np.mean(raw))
        assert stats.mu == mu
        cal_scalar = [calibrate(float(v), int(c), mu) for v, c in zip(raw, correct)]
        lo, hi = min(cal_scalar), max(cal_scalar)
        for item, v, c, cal in zip(items, raw, correct, cal_scalar):
            assert item.raw == float(v)
            assert item.correct == int(c)
            assert item.calibrated == cal
            assert item.b == (cal - lo) / (hi - lo) * (2.0 * half_width) - half_width

    def test_item_invariants(self):
        rng = np.random.default_rng(9)
        raw = rng.uniform(0, 4, 500)
        correct = rng.integers(0, 2, 500)
        rs = records_from_raw(raw, [int(c) for c in correct])
        items, stats = calibrate_dataset(rs, 3.0)
        for item in items:
            assert item.calibrated >= item.raw
            if item.correct == 1:
                assert item.calibrated == item.raw
            elif item.raw < stats.mu:
                assert item.calibrated == stats.mu
            else:
                assert item.calibrated == item.raw
            assert -3.0 <= item.b <= 3.0

    def test_all_equal_difficulties_map_to_zero(self):
        rs = records_from_raw([2.0, 2.0, 2.0], [1, 1, 1])
        items, _ = calibrate_dataset(rs, 3.0)
        assert [it.b for it in items] == [0.0, 0.0, 0.0]

    def test_frozen_stats_reused(self):
        rs1 = records_from_raw([1.0, 2.0, 3.0], [1, 1, 1])
        rs2 = records_from_raw([1.5, 2.5], [1, 1])
        _, stats = calibrate_dataset(rs1, 3.0)
        items, stats_out = calibrate_dataset(rs2, 3.0, stats=stats)
        assert stats_out == stats
        np.testing.assert_allclose([it.b for it in items], [-1.5, 1.5])

    def test_order_preserved(self):
        rs = records_from_raw([3.0, 1.0, 2.0], [1, 1, 1])
        items, _ = calibrate_dataset(rs, 3.0)
        assert [it.id for it in items] == ["r0", "r1", "r2"]
