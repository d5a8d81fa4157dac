"""Tracking and adversarial losses, differentiable end to end.

The tracking loss is a weighted sum of a penalty-reduced focal term on the
score map, an L1 term on normalized box parameters, and a generalized-IoU
term.  The adversarial loss reuses it to pull predictions toward an
attacker-chosen target while pushing them away from both the ground truth
and the clean model output:

    L_adv = e(pred, target) - e(pred, true) - e(pred, ori)

with e the tracking loss and the clean output entering only as a constant.
Attack loops perform descent on this scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxes import BBox
from .diffmath import (
    DiffValue,
    Recording,
    UsageError,
    absolute,
    clamp,
    log,
    maximum,
    minimum,
    power,
)

FOCAL_GAMMA = 2.0
FOCAL_BETA = 4.0


@dataclass(frozen=True)
class LossWeights:
    """Weights for the focal, L1 and GIoU components."""
    focal: float = 1.0
    l1: float = 5.0
    giou: float = 2.0

    def __post_init__(self):
        if min(self.focal, self.l1, self.giou) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.focal == self.l1 == self.giou == 0:
            raise ValueError("loss weights must not all be zero")


@dataclass
class TrackTarget:
    """A supervision target: heatmap over score cells plus a box, tagged by
    role (true / target / ori)."""
    score_map: np.ndarray
    box: BBox
    role: str = "true"


def gaussian_heatmap(box: BBox, score_size: int, patch_size: float,
                     sigma_cells: float = 1.0) -> np.ndarray:
    """Gaussian bump centered on the box center, normalized so the peak
    cell is exactly 1.

    Normalization happens in the exponent (shift by the smallest squared
    distance), which is identical to dividing by the max but cannot
    underflow to 0/0 when the center sits far outside the grid.
    """
    stride = patch_size / score_size
    u = box.cx / stride - 0.5
    v = box.cy / stride - 0.5
    jj, ii = np.meshgrid(np.arange(score_size), np.arange(score_size))
    d2 = (jj - u) ** 2 + (ii - v) ** 2
    return np.exp(-(d2 - d2.min()) / (2.0 * sigma_cells ** 2))


def make_target(box: BBox, score_size: int, patch_size: float,
                sigma_cells: float = 1.0, role: str = "true") -> TrackTarget:
    return TrackTarget(gaussian_heatmap(box, score_size, patch_size, sigma_cells),
                       box, role)


# ---------------------------------------------------------------------------
# value coercion: losses accept DiffValues, arrays, or BBox
# ---------------------------------------------------------------------------

def _find_recording(*values):
    for v in values:
        if isinstance(v, DiffValue):
            return v.rec
    return Recording()


def _as_value(rec: Recording, x) -> DiffValue:
    if isinstance(x, DiffValue):
        if x.rec is not rec:
            raise UsageError("mixed recordings in loss inputs")
        return x
    if isinstance(x, BBox):
        return rec.constant(x.as_array())
    return rec.constant(np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# components
# ---------------------------------------------------------------------------

def focal_loss(pred_map, gt_map) -> DiffValue:
    """Penalty-reduced pixelwise focal loss, averaged over positive cells.

    Positive cells are the peak(s) of the target map; all other cells are
    weighted down by (1 - gt)^beta.  Predictions must lie strictly in
    (0, 1); targets in [0, 1].
    """
    rec = _find_recording(pred_map)
    gt = np.asarray(gt_map.value if isinstance(gt_map, DiffValue) else gt_map,
                    dtype=np.float64)
    pred = _as_value(rec, pred_map)
    if pred.value.shape != gt.shape:
        raise UsageError(
            f"score map shapes differ: {pred.value.shape} vs {gt.shape}")
    pos = gt >= gt.max()
    n_pos = max(int(pos.sum()), 1)
    pos_w = rec.constant(pos.astype(np.float64))
    neg_w = rec.constant((~pos) * (1.0 - gt) ** FOCAL_BETA)
    one = rec.constant(1.0)
    pos_term = power(one - pred, FOCAL_GAMMA) * log(pred) * pos_w
    neg_term = power(pred, FOCAL_GAMMA) * log(one - pred) * neg_w
    return -(pos_term.sum() + neg_term.sum()) / rec.constant(float(n_pos))


def _box_xyxy(b: DiffValue):
    x1 = b[0]
    y1 = b[1]
    x2 = b[0] + b[2]
    y2 = b[1] + b[3]
    return x1, y1, x2, y2


def l1_box_loss(box_a, box_b, patch_size: float = 128.0) -> DiffValue:
    """Mean absolute difference of (cx, cy, w, h), normalized by patch size."""
    rec = _find_recording(box_a, box_b)
    a = _as_value(rec, box_a)
    b = _as_value(rec, box_b)
    half = rec.constant(0.5)
    terms = (
        absolute((a[0] + half * a[2]) - (b[0] + half * b[2])),
        absolute((a[1] + half * a[3]) - (b[1] + half * b[3])),
        absolute(a[2] - b[2]),
        absolute(a[3] - b[3]),
    )
    total = terms[0] + terms[1] + terms[2] + terms[3]
    return total / rec.constant(4.0 * patch_size)


def giou_loss(box_a, box_b) -> DiffValue:
    """1 - GIoU; ranges over [0, 2]."""
    rec = _find_recording(box_a, box_b)
    a = _as_value(rec, box_a)
    b = _as_value(rec, box_b)
    ax1, ay1, ax2, ay2 = _box_xyxy(a)
    bx1, by1, bx2, by2 = _box_xyxy(b)
    zero = rec.constant(0.0)
    iw = maximum(minimum(ax2, bx2) - maximum(ax1, bx1), zero)
    ih = maximum(minimum(ay2, by2) - maximum(ay1, by1), zero)
    inter = iw * ih
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    union = area_a + area_b - inter
    hull = (maximum(ax2, bx2) - minimum(ax1, bx1)) * \
           (maximum(ay2, by2) - minimum(ay1, by1))
    giou = inter / union - (hull - union) / hull
    return rec.constant(1.0) - giou


class _PredView:
    __slots__ = ("score_map", "box")

    def __init__(self, score_map, box):
        self.score_map = score_map
        self.box = box


def _pred_in_recording(rec: Recording, pred) -> "_PredView":
    return _PredView(_as_value(rec, pred.score_map), _as_value(rec, pred.box))


def track_loss(pred, target: TrackTarget, weights: LossWeights = LossWeights(),
               patch_size: float = 128.0) -> DiffValue:
    """Composite tracking loss of a prediction against one target.

    ``pred`` is anything with ``score_map`` and ``box`` attributes, either
    DiffValues (differentiable path) or plain arrays / BBox.
    """
    rec = _find_recording(pred.score_map, pred.box)
    pred = _pred_in_recording(rec, pred)
    total = rec.constant(0.0)
    if weights.focal:
        total = total + rec.constant(weights.focal) * \
            focal_loss(_as_value(rec, pred.score_map), target.score_map)
    if weights.l1:
        total = total + rec.constant(weights.l1) * \
            l1_box_loss(_as_value(rec, pred.box), target.box, patch_size)
    if weights.giou:
        total = total + rec.constant(weights.giou) * \
            giou_loss(_as_value(rec, pred.box), target.box)
    return total


def adversarial_loss(pred, y_target: TrackTarget, y_true: TrackTarget,
                     y_ori: TrackTarget, weights: LossWeights = LossWeights(),
                     patch_size: float = 128.0) -> DiffValue:
    """Targeted attack objective; lower is better for the attacker.

    The clean-output term uses the unattacked model's prediction as a
    constant repulsor; it must be supplied.
    """
    if y_ori is None:
        raise UsageError("adversarial loss requires the clean model output")
    rec = _find_recording(pred.score_map, pred.box)
    pred = _pred_in_recording(rec, pred)
    attract = track_loss(pred, y_target, weights, patch_size)
    repel_true = track_loss(pred, y_true, weights, patch_size)
    repel_ori = track_loss(pred, y_ori, weights, patch_size)
    return attract - repel_true - repel_ori


def attack_objective(pred, y_target, y_true, y_ori,
                     weights: LossWeights = LossWeights(),
                     patch_size: float = 128.0, mode: str = "adv") -> DiffValue:
    """Attack loss selector: "adv" includes the clean-output repulsor,
    "track" drops it (the conventional targeted baseline)."""
    if mode == "adv":
        return adversarial_loss(pred, y_target, y_true, y_ori, weights, patch_size)
    if mode == "track":
        rec = _find_recording(pred.score_map, pred.box)
        pred = _pred_in_recording(rec, pred)
        attract = track_loss(pred, y_target, weights, patch_size)
        repel = track_loss(pred, y_true, weights, patch_size)
        return attract - repel
    raise UsageError(f"unknown attack loss mode {mode!r}")
