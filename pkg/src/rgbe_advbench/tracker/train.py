"""Surrogate tracker training: Adam on the composite tracking loss."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..boxes import BBox
from ..diffmath import Recording, backward
from ..losses import LossWeights, TrackTarget, make_target, track_loss
from .model import PatchPair, TrackerConfig, TrackerParams, forward, pair_nodes, weight_nodes
from .sampling import build_pair, build_template


class TrainingError(RuntimeError):
    def __init__(self, message, step):
        super().__init__(f"{message} at step {step}")
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 2400
    lr: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    loss_weights: LossWeights = field(default_factory=LossWeights)
    pairs_per_sequence: int = 12
    jitter_frac: float = 0.18     # search-center jitter, fraction of region side
    scale_jitter: float = 0.10


@dataclass
class LabeledPair:
    pair: PatchPair
    target: TrackTarget


def build_dataset(sequences, config: TrackerConfig, tconfig: TrainConfig):
    """Sample labeled template/search pairs from sequences.

    Template crops sit on the ground truth; search crops are centered on a
    jittered, scale-perturbed copy of the ground truth so the model learns
    to re-localize inside the search region.  Deterministic per seed.
    """
    if not sequences:
        raise ValueError("empty training set")
    rng = np.random.default_rng(tconfig.seed)
    dataset = []
    for seq in sequences:
        vox_cache = {}
        template = build_template(seq, 0, seq.gt_boxes[0], config, vox_cache)
        n = seq.n_frames
        for _ in range(tconfig.pairs_per_sequence):
            j = int(rng.integers(1, n)) if n > 1 else 0
            gt = seq.gt_boxes[j]
            side = config.search_scale * np.sqrt(gt.w * gt.h)
            jit = tconfig.jitter_frac * side
            dx, dy = rng.uniform(-jit, jit, size=2)
            sjit = 1.0 + rng.uniform(-tconfig.scale_jitter, tconfig.scale_jitter)
            center = BBox.from_center(gt.cx + dx, gt.cy + dy,
                                      gt.w * sjit, gt.h * sjit)
            pair, geom = build_pair(seq, j, center, template, config, vox_cache)
            label = geom.frame_to_patch(gt)
            target = make_target(label, config.score_size, config.search_size,
                                 config.heatmap_sigma)
            dataset.append(LabeledPair(pair=pair, target=target))
    return dataset


def train(params: TrackerParams, dataset, tconfig: TrainConfig):
    """Adam descent on the tracking loss; returns (new params, loss curve).

    Raises :class:`TrainingError` with the step index if the loss goes
    non-finite.  Bit-deterministic for identical inputs and seed.
    """
    if not dataset:
        raise ValueError("empty dataset")
    params = params.copy()
    config = params.config
    rng = np.random.default_rng(tconfig.seed)
    m = {k: np.zeros_like(v) for k, v in params.weights.items()}
    v = {k: np.zeros_like(val) for k, val in params.weights.items()}
    losses = []
    order = []
    for step in range(tconfig.steps):
        if not order:
            order = list(rng.permutation(len(dataset)))
        lp = dataset[order.pop()]

        rec = Recording()
        wn = weight_nodes(rec, params, trainable=True)
        nodes = pair_nodes(rec, lp.pair, config)
        res = forward(rec, params, nodes, wn)
        loss = track_loss(res, lp.target, tconfig.loss_weights,
                          patch_size=config.search_size)
        loss_val = float(loss.value)
        if not np.isfinite(loss_val):
            raise TrainingError("non-finite training loss", step)
        losses.append(loss_val)

        grads = backward(loss)
        t = step + 1
        bc1 = 1.0 - tconfig.beta1 ** t
        bc2 = 1.0 - tconfig.beta2 ** t
        for name, node in wn.items():
            g = grads[node]
            m[name] = tconfig.beta1 * m[name] + (1.0 - tconfig.beta1) * g
            v[name] = tconfig.beta2 * v[name] + (1.0 - tconfig.beta2) * g * g
            step_dir = (m[name] / bc1) / (np.sqrt(v[name] / bc2) + tconfig.adam_eps)
            params.weights[name] = params.weights[name] - tconfig.lr * step_dir
    params.step_count += tconfig.steps
    params.seed = tconfig.seed
    return params, losses
