"""Loss components: closed forms, oracles, gradients, attack objective."""

import numpy as np
import pytest

from rgbe_advbench import diffmath as dm
from rgbe_advbench.boxes import BBox
from rgbe_advbench.losses import (
    LossWeights,
    TrackTarget,
    adversarial_loss,
    attack_objective,
    focal_loss,
    gaussian_heatmap,
    giou_loss,
    l1_box_loss,
    make_target,
    track_loss,
)


class Pred:
    def __init__(self, score_map, box):
        self.score_map = score_map
        self.box = box


def one_hot_target(box: BBox, score_size=16, patch_size=128.0, role="true"):
    """Target whose map is exactly one-hot at the box-center cell; the
    focal minimum (pred -> 1 at the peak, 0 elsewhere) then reaches ~0."""
    stride = patch_size / score_size
    m = np.zeros((score_size, score_size))
    j = int(np.clip(round(box.cx / stride - 0.5), 0, score_size - 1))
    i = int(np.clip(round(box.cy / stride - 0.5), 0, score_size - 1))
    m[i, j] = 1.0
    return TrackTarget(m, box, role)


def rasterized_giou(a: BBox, b: BBox, res: int = 2000):
    """Pixel-counting GIoU oracle on a fine raster over the hull."""
    x0 = min(a.x, b.x)
    y0 = min(a.y, b.y)
    x1 = max(a.x2, b.x2)
    y1 = max(a.y2, b.y2)
    xs = np.linspace(x0, x1, res, endpoint=False) + (x1 - x0) / (2 * res)
    ys = np.linspace(y0, y1, res, endpoint=False) + (y1 - y0) / (2 * res)
    gx, gy = np.meshgrid(xs, ys)
    cell = ((x1 - x0) / res) * ((y1 - y0) / res)
    in_a = (gx >= a.x) & (gx < a.x2) & (gy >= a.y) & (gy < a.y2)
    in_b = (gx >= b.x) & (gx < b.x2) & (gy >= b.y) & (gy < b.y2)
    inter = np.count_nonzero(in_a & in_b) * cell
    union = np.count_nonzero(in_a | in_b) * cell
    hull = (x1 - x0) * (y1 - y0)
    return inter / union - (hull - union) / hull


class TestFocal:
    def test_perfect_prediction_limit(self):
        gt = one_hot_target(BBox(56, 56, 16, 16)).score_map
        pred = np.clip(gt, 1e-6, 1 - 1e-6)
        assert float(focal_loss(pred, gt).value) <= 1e-4

    def test_uniform_half_vs_one_hot_closed_form(self):
        gt = np.zeros((2, 2))
        gt[0, 0] = 1.0
        pred = np.full((2, 2), 0.5)
        # one positive cell: (1-p)^2 log p; three negatives: p^2 log(1-p)
        expected = -(0.25 * np.log(0.5) + 3 * 0.25 * np.log(0.5))
        assert float(focal_loss(pred, gt).value) == pytest.approx(expected, rel=1e-12)

    def test_gradient_matches_fd(self, rng):
        gt = gaussian_heatmap(BBox(40, 72, 20, 24), 16, 128)

        def f(x):
            return focal_loss(dm.clamp(dm.sigmoid(x), 1e-6, 1 - 1e-6), gt)

        err = dm.finite_diff_check(f, rng.normal(size=(16, 16)),
                                   coords=range(0, 256, 13))
        assert err <= 1e-4

    def test_shape_mismatch(self):
        with pytest.raises(dm.UsageError):
            focal_loss(np.full((4, 4), 0.5), np.zeros((2, 2)))

    def test_nonnegative(self, rng):
        for _ in range(20):
            gt = gaussian_heatmap(BBox(rng.uniform(0, 96), rng.uniform(0, 96),
                                       20, 20), 16, 128)
            pred = np.clip(rng.uniform(0, 1, (16, 16)), 1e-6, 1 - 1e-6)
            assert float(focal_loss(pred, gt).value) >= 0.0


class TestL1:
    def test_identical_zero(self):
        b = BBox(10, 20, 30, 40)
        assert float(l1_box_loss(b, b).value) == 0.0

    def test_offset_formula(self):
        a = BBox(10, 20, 30, 40)
        b = BBox(20, 20, 30, 40)
        assert float(l1_box_loss(a, b, 128).value) == pytest.approx(10 / 128 / 4)

    def test_symmetry(self, rng):
        for _ in range(10):
            a = BBox(*rng.uniform(1, 50, 4))
            b = BBox(*rng.uniform(1, 50, 4))
            assert float(l1_box_loss(a, b).value) == \
                pytest.approx(float(l1_box_loss(b, a).value), rel=1e-12)


class TestGiou:
    def test_identical_zero(self):
        b = BBox(5, 5, 20, 10)
        assert float(giou_loss(b, b).value) == pytest.approx(0.0, abs=1e-12)

    def test_far_apart_approaches_two(self):
        a = BBox(0, 0, 1, 1)
        b = BBox(10_000, 10_000, 1, 1)
        assert float(giou_loss(a, b).value) == pytest.approx(2.0, abs=1e-3)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_rasterization_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a = BBox(rng.uniform(0, 60), rng.uniform(0, 60),
                 rng.uniform(5, 40), rng.uniform(5, 40))
        b = BBox(rng.uniform(0, 60), rng.uniform(0, 60),
                 rng.uniform(5, 40), rng.uniform(5, 40))
        got = 1.0 - float(giou_loss(a, b).value)
        assert got == pytest.approx(rasterized_giou(a, b), abs=1e-3)

    def test_symmetry(self, rng):
        a = BBox(*rng.uniform(1, 50, 4))
        b = BBox(*rng.uniform(1, 50, 4))
        assert float(giou_loss(a, b).value) == \
            pytest.approx(float(giou_loss(b, a).value), rel=1e-12)

    def test_gradient_matches_fd(self, rng):
        target = BBox(30, 30, 25, 25)

        def f(x):
            return giou_loss(x, target)

        for _ in range(5):
            point = np.array([rng.uniform(0, 60), rng.uniform(0, 60),
                              rng.uniform(5, 40), rng.uniform(5, 40)])
            assert dm.finite_diff_check(f, point) <= 1e-4


class TestTrackLoss:
    def target(self, box=BBox(56, 56, 16, 16)):
        return make_target(box, 16, 128)

    def pred_nodes(self, rec, logits, box):
        return Pred(dm.clamp(dm.sigmoid(rec.leaf(logits)), 1e-6, 1 - 1e-6),
                    rec.leaf(box))

    def test_prediction_equal_target_near_zero(self):
        tgt = one_hot_target(BBox(56, 56, 16, 16))
        pred = Pred(np.clip(tgt.score_map, 1e-6, 1 - 1e-6),
                    tgt.box.as_array())
        assert float(track_loss(pred, tgt).value) <= 1e-4

    def test_weight_zeroing_reduces_to_focal(self, rng):
        tgt = self.target()
        pred_map = np.clip(rng.uniform(0, 1, (16, 16)), 1e-6, 1 - 1e-6)
        pred = Pred(pred_map, np.array([40.0, 40.0, 20.0, 20.0]))
        only_focal = track_loss(pred, tgt, LossWeights(1.0, 0.0, 0.0))
        assert float(only_focal.value) == \
            pytest.approx(float(focal_loss(pred_map, tgt.score_map).value))

    def test_nonnegative(self, rng):
        for _ in range(10):
            tgt = self.target(BBox(*rng.uniform(10, 60, 2), 20, 20))
            pred = Pred(np.clip(rng.uniform(0, 1, (16, 16)), 1e-6, 1 - 1e-6),
                        np.array([*rng.uniform(0, 90, 2), *rng.uniform(5, 38, 2)]))
            assert float(track_loss(pred, tgt).value) >= 0.0

    def test_gradient_matches_fd(self, rng):
        tgt = self.target()
        logits = rng.normal(size=(16, 16))

        def f(x):
            rec = x.rec
            pred = Pred(dm.clamp(dm.sigmoid(rec.constant(logits)),
                                 1e-6, 1 - 1e-6), x)
            return track_loss(pred, tgt)

        point = np.array([35.0, 52.0, 24.0, 18.0])
        assert dm.finite_diff_check(f, point) <= 1e-4


class TestAdversarialLoss:
    def make(self, center, role="true"):
        return make_target(BBox.from_center(center[0], center[1], 20, 20),
                           16, 128, role=role)

    def test_sign_structure(self):
        y_target = self.make((96, 96), "target")
        y_true = self.make((32, 32))
        y_ori = self.make((30, 34), "ori")
        pred = Pred(np.clip(y_target.score_map, 1e-6, 1 - 1e-6),
                    y_target.box.as_array())
        val = float(adversarial_loss(pred, y_target, y_true, y_ori).value)
        assert val < 0.0

    def test_degenerate_collapse(self):
        t = one_hot_target(BBox.from_center(64, 64, 20, 20))
        pred = Pred(np.clip(t.score_map, 1e-6, 1 - 1e-6), t.box.as_array())
        val = float(adversarial_loss(pred, t, t, t).value)
        assert val == pytest.approx(-float(track_loss(pred, t).value), rel=1e-9)
        assert abs(val) <= 1e-4

    def test_missing_ori_rejected(self):
        t = self.make((64, 64))
        pred = Pred(np.clip(t.score_map, 1e-6, 1 - 1e-6), t.box.as_array())
        with pytest.raises(dm.UsageError):
            adversarial_loss(pred, t, t, None)

    def test_track_mode_drops_ori_term(self):
        y_target = self.make((96, 96), "target")
        y_true = self.make((32, 32))
        y_ori = self.make((20, 20), "ori")
        pred = Pred(np.clip(y_true.score_map, 1e-6, 1 - 1e-6),
                    np.array([30.0, 30.0, 20.0, 20.0]))
        adv = float(attack_objective(pred, y_target, y_true, y_ori, mode="adv").value)
        trk = float(attack_objective(pred, y_target, y_true, y_ori, mode="track").value)
        ori_term = float(track_loss(pred, y_ori).value)
        assert adv == pytest.approx(trk - ori_term, rel=1e-9)

    def test_gradient_matches_fd(self, rng):
        y_target = self.make((96, 96), "target")
        y_true = self.make((32, 32))
        y_ori = self.make((40, 44), "ori")
        logits = rng.normal(size=(16, 16))

        def f(x):
            rec = x.rec
            pred = Pred(dm.clamp(dm.sigmoid(rec.constant(logits)), 1e-6, 1 - 1e-6),
                        x)
            return adversarial_loss(pred, y_target, y_true, y_ori)

        point = np.array([50.0, 58.0, 22.0, 26.0])
        assert dm.finite_diff_check(f, point) <= 1e-4


class TestMonotoneTargeting:
    @pytest.mark.parametrize("seed", range(8))
    def test_interpolation_toward_target_decreases_target_term(self, seed):
        # interpolate the axis-aligned box straight toward the target box;
        # only the box moves, so only the L1+GIoU part of e can change
        rng = np.random.default_rng(seed)
        tgt = make_target(BBox(*rng.uniform(20, 70, 2), *rng.uniform(10, 30, 2)),
                          16, 128, role="target")
        start = np.array([*rng.uniform(0, 90, 2), *rng.uniform(5, 35, 2)])
        end = tgt.box.as_array()
        pred_map = np.clip(rng.uniform(0, 1, (16, 16)), 1e-6, 1 - 1e-6)
        vals = []
        for s in (0.0, 0.25, 0.5, 0.75, 1.0):
            box = start + s * (end - start)
            vals.append(float(track_loss(Pred(pred_map, box), tgt).value))
        assert all(b < a for a, b in zip(vals, vals[1:])), vals


class TestWeights:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            LossWeights(-1.0, 1.0, 1.0)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            LossWeights(0.0, 0.0, 0.0)
