"""Tracking-quality metrics: precision, normalized precision, success.

Conventions (fixed here, auditable):
  * PR: percent of frames with center error strictly below 20 px.
  * NPR: mean over 51 thresholds u in [0, 0.5] (step 0.01) of the fraction
    of frames with diagonal-normalized center error <= u, times 100.
  * SR: mean over 20 thresholds t in {0.00, 0.05, ..., 0.95} of the
    fraction of frames with IoU strictly above t, times 100.  All-zero IoU
    therefore scores exactly 0 and perfect tracking exactly 100.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..boxes import BBox

PR_THRESHOLD_PX = 20.0
NPR_THRESHOLDS = np.round(np.arange(51) * 0.01, 2)
SR_THRESHOLDS = np.round(np.arange(20) * 0.05, 2)


@dataclass
class FrameRecord:
    """Per-frame outcome of a tracking run."""
    frame_idx: int
    gt: BBox
    pred: BBox
    center_error: float
    norm_center_error: float
    iou: float
    target_distance: float = None   # prediction center to attack-target center

    @classmethod
    def from_boxes(cls, frame_idx: int, gt: BBox, pred: BBox,
                   target_box: BBox = None) -> "FrameRecord":
        err = gt.center_distance(pred)
        diag = float(np.hypot(gt.w, gt.h))
        tdist = None if target_box is None else pred.center_distance(target_box)
        return cls(frame_idx=frame_idx, gt=gt, pred=pred, center_error=err,
                   norm_center_error=err / diag, iou=iou(gt, pred),
                   target_distance=tdist)


def iou(b1: BBox, b2: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    iw = max(0.0, min(b1.x2, b2.x2) - max(b1.x, b2.x))
    ih = max(0.0, min(b1.y2, b2.y2) - max(b1.y, b2.y))
    inter = iw * ih
    return inter / (b1.area + b2.area - inter)


def _require_records(records):
    if not records:
        raise ValueError("metrics need at least one frame record")


def precision_rate(records, threshold: float = PR_THRESHOLD_PX) -> float:
    _require_records(records)
    errs = np.array([r.center_error for r in records])
    return 100.0 * float(np.mean(errs < threshold))


def norm_precision_rate(records) -> float:
    _require_records(records)
    errs = np.array([r.norm_center_error for r in records])
    fractions = [(errs <= u).mean() for u in NPR_THRESHOLDS]
    return 100.0 * float(np.mean(fractions))


def success_rate(records) -> float:
    _require_records(records)
    ious = np.array([r.iou for r in records])
    fractions = [(ious > t).mean() for t in SR_THRESHOLDS]
    return 100.0 * float(np.mean(fractions))


def success_curve(records):
    """(thresholds, fraction of frames with IoU above each) for plotting."""
    _require_records(records)
    ious = np.array([r.iou for r in records])
    ts = np.round(np.arange(21) * 0.05, 2)
    return ts, np.array([(ious > t).mean() for t in ts])


def precision_curve(records, max_px: float = 50.0, n: int = 51):
    _require_records(records)
    errs = np.array([r.center_error for r in records])
    ts = np.linspace(0.0, max_px, n)
    return ts, np.array([(errs < t).mean() for t in ts])
