"""Attack data types: budgets, targets, perturbation state, results."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..boxes import BBox
from ..losses import LossWeights, TrackTarget


class AttackError(RuntimeError):
    """Numeric failure inside an attack loop; message carries the iteration."""


@dataclass(frozen=True)
class AttackBudget:
    """L-inf budget: max deviation eps, step size alpha, iteration count."""
    eps: float = 10.0
    alpha: float = 1.0
    iters: int = 10

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be non-negative")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.iters < 1:
            raise ValueError("iteration count must be at least 1")


# defaults matching the evaluation protocol: single-modality attacks get a
# wider budget than multimodal ones
UNIMODAL_EPS = 10.0
MULTIMODAL_EPS = 8.0


@dataclass(frozen=True)
class TargetSpec:
    """Attacker's desired box, in search-patch coordinates."""
    box: BBox

    def validated(self, patch_size: float) -> "TargetSpec":
        b = self.box
        if b.x < 0 or b.y < 0 or b.x2 > patch_size or b.y2 > patch_size:
            raise ValueError("target box outside the search patch")
        return self


def far_quadrant_target(true_box: BBox, patch_size: float) -> TargetSpec:
    """Ground-truth-sized box centered on the search-patch quadrant center
    farthest from the true center (first wins on ties)."""
    q = patch_size / 4.0
    centers = [(q, q), (3 * q, q), (q, 3 * q), (3 * q, 3 * q)]
    d = [np.hypot(cx - true_box.cx, cy - true_box.cy) for cx, cy in centers]
    cx, cy = centers[int(np.argmax(d))]
    w = min(true_box.w, patch_size / 2.0)
    h = min(true_box.h, patch_size / 2.0)
    cx = float(np.clip(cx, w / 2.0, patch_size - w / 2.0))
    cy = float(np.clip(cy, h / 2.0, patch_size - h / 2.0))
    return TargetSpec(BBox.from_center(cx, cy, w, h))


@dataclass
class AttackTargets:
    """The three reference predictions the attack loss plays against."""
    y_target: TrackTarget
    y_true: TrackTarget
    y_ori: TrackTarget
    weights: LossWeights = field(default_factory=LossWeights)
    loss_mode: str = "adv"            # "adv" or "track"


@dataclass
class PerturbationState:
    """Perturbations carried across frames, always within their budgets.

    ``eta_vox`` holds slot-aligned coordinate offsets (n_cap, 3); rgb and
    frame etas are pixel offset grids.
    """
    eta_rgb: np.ndarray = None
    eta_vox: np.ndarray = None
    eta_frame: np.ndarray = None
    frame_idx: int = -1


@dataclass
class AttackResult:
    """Adversarial inputs plus diagnostics from one attacked frame."""
    pair: object                      # PatchPair with adversarial members
    loss_trace: list                  # primary loop: length iters + 1
    box_before: BBox
    box_after: BBox
    etas: dict = field(default_factory=dict)
    extra_traces: dict = field(default_factory=dict)
