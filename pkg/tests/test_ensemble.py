"""Ensemble tests: motion bounds, window tiling, APCE, expert weighting,
selection and the reliability gate, plus a synthetic translation oracle for
the weak decisions."""

import numpy as np
import pytest

from cftrack import corrfilter, ensemble
from cftrack.ensemble import (
    ExpertDecision,
    ReliabilityState,
    SearchScope,
    apce,
    expert_weights,
    reliability_gate,
    select_expert,
    tile_windows,
    update_motion_bound,
    weak_decide,
)
from cftrack.features import hog_stack
from cftrack.imaging import Rect, hann_window, sample_window


def _decision(expert_id=0, f_max=1.0, apce_value=1.0, peak=(0.0, 0.0)):
    return ExpertDecision(expert_id, Rect(0, 0, 10, 10), peak[0], peak[1],
                          np.zeros((2, 2)), f_max, apce_value)


class TestMotionBound:
    def test_per_axis_maximum(self):
        dx, dy = 0.0, 0.0
        dx, dy = update_motion_bound(dx, dy, (3, 4), (0, 0))
        dx, dy = update_motion_bound(dx, dy, (5, 4), (3, 4))
        assert (dx, dy) == (3.0, 4.0)

    def test_first_frame_zero(self):
        assert update_motion_bound(0.0, 0.0, (7, 7), (7, 7)) == (0.0, 0.0)

    def test_stationary_stays_zero(self):
        dx = dy = 0.0
        for _ in range(10):
            dx, dy = update_motion_bound(dx, dy, (2.5, 9.0), (2.5, 9.0))
        assert (dx, dy) == (0.0, 0.0)

    def test_monotone_nondecreasing(self):
        rng = np.random.default_rng(0)
        dx = dy = 0.0
        prev = np.zeros(2)
        for _ in range(50):
            cur = prev + rng.normal(size=2)
            ndx, ndy = update_motion_bound(dx, dy, cur, prev)
            assert ndx >= dx and ndy >= dy
            dx, dy, prev = ndx, ndy, cur


class TestTileWindows:
    def test_degenerate_scope_single_window(self):
        scope = SearchScope(50.0, 40.0, 0.0, 0.0, padding=1.2)
        wins = tile_windows(scope, Rect(50, 40, 20, 10))
        assert len(wins) == 1
        assert (wins[0].cx, wins[0].cy) == (50.0, 40.0)
        assert (wins[0].w, wins[0].h) == (24.0, 12.0)

    def test_horizontal_row_of_three(self):
        target = Rect(50, 40, 20, 10)
        scope = SearchScope(50.0, 40.0, dx=10.0, dy=0.0)
        wins = tile_windows(scope, target)
        assert len(wins) == 3
        assert sorted(w.cx for w in wins) == [40.0, 50.0, 60.0]
        assert all(w.cy == 40.0 for w in wins)

    def test_centers_stay_inside_scope(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            dx = float(rng.uniform(0, 60))
            dy = float(rng.uniform(0, 60))
            scope = SearchScope(0.0, 0.0, dx, dy)
            wins = tile_windows(scope, Rect(0, 0, 16, 12), max_experts=9)
            assert len(wins) <= 9
            for w in wins:
                assert abs(w.cx) <= dx + 1e-9
                assert abs(w.cy) <= dy + 1e-9

    def test_center_window_always_present(self):
        scope = SearchScope(5.0, 6.0, 33.0, 47.0)
        wins = tile_windows(scope, Rect(5, 6, 10, 10), max_experts=5)
        assert any(w.cx == 5.0 and w.cy == 6.0 for w in wins)


class TestApce:
    def test_one_hot_three_by_three(self):
        s = np.zeros((3, 3))
        s[1, 1] = 1.0
        assert apce(s) == pytest.approx(9.0, abs=1e-12)

    def test_constant_map_guard(self):
        assert apce(np.full((4, 4), 0.7)) == 0.0

    def test_hand_computed_two_by_two(self):
        s = np.array([[0.5, 0.1], [0.1, 0.1]])
        assert apce(s) == pytest.approx(4.0, abs=1e-12)

    def test_shift_invariance_and_scale_law(self):
        rng = np.random.default_rng(2)
        s = rng.uniform(size=(6, 7))
        base = apce(s)
        assert apce(s + 3.7) == pytest.approx(base, rel=1e-9)
        assert apce(2.5 * s) == pytest.approx(base, rel=1e-9)

    def test_direct_formula_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            s = rng.normal(size=(5, 8))
            want = abs(s.max() - s.min()) ** 2 / np.mean((s - s.min()) ** 2)
            assert apce(s) == pytest.approx(want, rel=1e-12)


class TestExpertWeights:
    def test_single_expert_weight_one(self):
        d = expert_weights([_decision()])
        assert d[0].weight == 1.0

    def test_product_weighting(self):
        ds = [_decision(0, f_max=1.0, apce_value=2.0),
              _decision(1, f_max=1.0, apce_value=6.0)]
        expert_weights(ds)
        assert ds[0].weight == pytest.approx(0.25)
        assert ds[1].weight == pytest.approx(0.75)

    def test_all_zero_products_uniform(self):
        ds = [_decision(i, f_max=0.0, apce_value=0.0) for i in range(4)]
        expert_weights(ds)
        assert all(d.weight == pytest.approx(0.25) for d in ds)

    def test_weights_form_probability_vector(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            ds = [_decision(i, f_max=float(rng.uniform(0, 2)),
                            apce_value=float(rng.uniform(0, 30)))
                  for i in range(int(rng.integers(1, 9)))]
            expert_weights(ds)
            total = sum(d.weight for d in ds)
            assert total == pytest.approx(1.0, abs=1e-9)
            assert all(d.weight >= 0 for d in ds)

    def test_fmax_only_mode(self):
        ds = [_decision(0, f_max=1.0, apce_value=100.0),
              _decision(1, f_max=3.0, apce_value=0.1)]
        expert_weights(ds, mode="fmax")
        assert ds[1].weight == pytest.approx(0.75)


class TestSelectExpert:
    def test_argmax_weight(self):
        ds = [_decision(0, peak=(10, 10)), _decision(1, peak=(20, 20)),
              _decision(2, peak=(30, 30))]
        for d, w in zip(ds, (0.2, 0.5, 0.3)):
            d.weight = w
        assert select_expert(ds) == ((20.0, 20.0), 1)

    def test_single_expert(self):
        d = _decision(0, peak=(7, 9))
        d.weight = 1.0
        assert select_expert([d]) == ((7.0, 9.0), 0)

    def test_tie_goes_to_lowest_id(self):
        ds = [_decision(0, peak=(1, 1)), _decision(1, peak=(2, 2))]
        ds[0].weight = ds[1].weight = 0.5
        assert select_expert(ds)[1] == 0

    def test_invariant_under_rescaled_scores(self):
        rng = np.random.default_rng(5)
        scores = rng.uniform(0.1, 1.0, size=6)
        ds = [_decision(i, f_max=s, apce_value=1.0) for i, s in enumerate(scores)]
        expert_weights(ds)
        pick_a = select_expert(ds)
        ds2 = [_decision(i, f_max=37.0 * s, apce_value=1.0)
               for i, s in enumerate(scores)]
        expert_weights(ds2)
        assert select_expert(ds2)[1] == pick_a[1]


class TestReliabilityGate:
    def test_warm_up_always_passes(self):
        state = ReliabilityState()
        assert reliability_gate(state, _decision(f_max=0.0, apce_value=0.0), 0.6, 0.5)
        assert state.count == 1

    def test_pass_case(self):
        state = ReliabilityState(mean_fmax=1.0, mean_apce=10.0, count=5)
        assert reliability_gate(state, _decision(f_max=0.9, apce_value=8.0), 0.6, 0.5)

    def test_fail_case_low_fmax(self):
        state = ReliabilityState(mean_fmax=1.0, mean_apce=10.0, count=5)
        assert not reliability_gate(state, _decision(f_max=0.3, apce_value=8.0), 0.6, 0.5)

    def test_failing_frames_do_not_update_means(self):
        state = ReliabilityState(mean_fmax=1.0, mean_apce=10.0, count=5)
        reliability_gate(state, _decision(f_max=0.0, apce_value=0.0), 0.6, 0.5)
        assert state.mean_fmax == 1.0 and state.mean_apce == 10.0 and state.count == 5

    def test_passing_frames_update_running_mean(self):
        state = ReliabilityState()
        reliability_gate(state, _decision(f_max=1.0, apce_value=10.0), 0.6, 0.5)
        reliability_gate(state, _decision(f_max=3.0, apce_value=30.0), 0.6, 0.5)
        assert state.mean_fmax == pytest.approx(2.0)
        assert state.mean_apce == pytest.approx(20.0)
        assert state.count == 2


def _train_on(frame, box, cell=4):
    pad = 1.2
    ph = int(round(box.h * pad / cell)) * cell
    pw = int(round(box.w * pad / cell)) * cell
    pixels = sample_window(frame, box.cx, box.cy, box.w * pad, box.h * pad, ph, pw)
    feat = hog_stack(pixels, cell)
    p, q = feat.shape[:2]
    label = corrfilter.make_label(p, q, 0.1 * np.sqrt(p * q))
    return corrfilter.train_kcf(feat, label, 1e-4, 0.5, hann_window(q, p))


def _textured_frame(rng, h=120, w=160):
    frame = 0.5 + 0.05 * rng.standard_normal((h, w))
    square = rng.uniform(0.0, 1.0, size=(24, 24))
    return np.clip(frame, 0, 1), square


class TestWeakDecide:
    def setup_method(self):
        rng = np.random.default_rng(17)
        self.frame, self.square = _textured_frame(rng)
        self.frame[40:64, 60:84] = self.square
        self.box = Rect(72.0, 52.0, 24, 24)
        self.model = _train_on(self.frame, self.box)
        self.rng = rng

    def test_self_detection_within_one_cell(self):
        window = Rect(self.box.cx, self.box.cy, 24 * 1.2, 24 * 1.2)
        d = weak_decide(self.model, self.frame, window, cell_size=4)
        assert abs(d.peak_x - self.box.cx) <= 4.0 * 1.2
        assert abs(d.peak_y - self.box.cy) <= 4.0 * 1.2

    def test_translation_oracle(self):
        shifted = np.clip(0.5 + 0.05 * self.rng.standard_normal(self.frame.shape), 0, 1)
        shifted[40:64, 66:90] = self.square   # target moved +6 px in x
        window = Rect(self.box.cx, self.box.cy, 24 * 1.2, 24 * 1.2)
        d = weak_decide(self.model, shifted, window, cell_size=4)
        assert abs(d.peak_x - (self.box.cx + 6.0)) <= 4.0 * 1.2 + 1e-9
        assert abs(d.peak_y - self.box.cy) <= 4.0 * 1.2 + 1e-9

    def test_noise_window_has_lower_apce(self):
        window = Rect(self.box.cx, self.box.cy, 24 * 1.2, 24 * 1.2)
        on_target = weak_decide(self.model, self.frame, window, cell_size=4)
        noise_window = Rect(20.0, 100.0, 24 * 1.2, 24 * 1.2)
        on_noise = weak_decide(self.model, self.frame, noise_window, cell_size=4)
        assert on_noise.apce < on_target.apce

    def test_batch_matches_single_calls(self):
        windows = [Rect(self.box.cx + o, self.box.cy, 28.8, 28.8) for o in (-8, 0, 8)]
        batch = ensemble.weak_decide_batch(self.model, self.frame, windows, 4)
        for k, win in enumerate(windows):
            single = weak_decide(self.model, self.frame, win, 4, expert_id=k)
            assert batch[k].peak_x == pytest.approx(single.peak_x)
            assert batch[k].peak_y == pytest.approx(single.peak_y)
            assert batch[k].f_max == pytest.approx(single.f_max)
            assert batch[k].apce == pytest.approx(single.apce)
