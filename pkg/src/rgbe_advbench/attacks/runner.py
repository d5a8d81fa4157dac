"""Attack dispatch for benchmark runs: name registry, per-sequence state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..boxes import BBox
from ..losses import LossWeights, TrackTarget, make_target
from ..tracker.model import ConfigurationError, PatchPair, TrackerParams, predict
from .core import (
    carry_plane,
    adv_init_voxels,
    evaluate_objective,
    fgsm,
    grad_opt_voxels,
    noise_baseline,
    noise_voxels,
    pgd_frame,
    pgd_rgb,
)
from .multimodal import (
    attack_rgb_event_frame_universal,
    attack_rgb_event_voxel,
    baseline_ae_adv,
    baseline_dare_snn,
)
from .types import (
    MULTIMODAL_EPS,
    UNIMODAL_EPS,
    AttackBudget,
    AttackResult,
    AttackTargets,
    PerturbationState,
    TargetSpec,
    far_quadrant_target,
)

ATTACK_NAMES = ("noise", "fgsm", "pgd-rgb", "pgd-frame", "advinit", "voxel",
                "fusion-voxel", "universal-frame", "ae-adv", "dare-snn")

_REQUIRES = {
    "pgd-rgb": ("rgb", "rgb+voxel", "rgb+frame"),
    "pgd-frame": ("frame", "rgb+frame"),
    "advinit": ("voxel", "rgb+voxel"),
    "voxel": ("voxel", "rgb+voxel"),
    "fusion-voxel": ("rgb+voxel",),
    "universal-frame": ("rgb+frame",),
    "ae-adv": ("voxel", "rgb+voxel"),
    "dare-snn": ("voxel", "rgb+voxel"),
}


@dataclass(frozen=True)
class AttackConfig:
    """One attack run: name, budget overrides, targeting and carry policy."""
    name: str = "pgd-rgb"
    eps: float = None                 # None -> 10 unimodal, 8 multimodal
    alpha: float = 1.0
    iters: int = 10
    loss_mode: str = "adv"
    temporal: str = "off"             # off | on | eq5-literal
    target: object = "far-quadrant"   # or a BBox in patch coordinates
    seed: int = 0
    order: str = "rgb-first"
    loss_weights: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self):
        if self.name not in ATTACK_NAMES:
            raise ConfigurationError(f"unknown attack {self.name!r}")
        if self.eps is not None and self.eps < 0:
            raise ConfigurationError("eps must be non-negative")
        if self.temporal not in ("off", "on", "eq5-literal"):
            raise ConfigurationError(f"unknown temporal mode {self.temporal!r}")

    def resolve_eps(self, modality: str) -> float:
        if self.eps is not None:
            return float(self.eps)
        return MULTIMODAL_EPS if "+" in modality else UNIMODAL_EPS

    def budget(self, modality: str) -> AttackBudget:
        return AttackBudget(eps=self.resolve_eps(modality), alpha=self.alpha,
                            iters=self.iters)


class AttackRunner:
    """Applies one configured attack frame by frame through a sequence.

    Holds the carried perturbation state and the universal eta; sequences
    are strictly sequential, distinct runners are independent.
    """

    def __init__(self, config: AttackConfig, params: TrackerParams):
        modality = params.config.modality
        allowed = _REQUIRES.get(config.name)
        if allowed is not None and modality not in allowed:
            raise ConfigurationError(
                f"attack {config.name!r} does not apply to modality {modality!r}")
        self.config = config
        self.params = params
        self.state = PerturbationState()
        self.universal_eta = None
        self.warm_cold = []           # (frame_idx, warm_loss, cold_loss)
        self._rng = np.random.default_rng(config.seed)
        self._frame_in_seq = 0

    def begin_sequence(self, seq_index: int):
        self.state = PerturbationState()
        self.universal_eta = None
        self.warm_cold = []
        self._rng = np.random.default_rng((self.config.seed, seq_index))
        self._frame_in_seq = 0

    def _target_spec(self, y_true: TrackTarget, patch: float) -> TargetSpec:
        if isinstance(self.config.target, BBox):
            return TargetSpec(self.config.target).validated(patch)
        if self.config.target == "far-quadrant":
            return far_quadrant_target(y_true.box, patch)
        raise ConfigurationError(f"unknown target spec {self.config.target!r}")

    def build_targets(self, pair: PatchPair, y_true: TrackTarget):
        mconf = self.params.config
        patch = float(mconf.search_size)
        tspec = self._target_spec(y_true, patch)
        y_target = make_target(tspec.box, mconf.score_size, patch,
                               mconf.heatmap_sigma, role="target")
        clean_out = predict(self.params, pair)
        y_ori = TrackTarget(clean_out.score_map, clean_out.bbox, role="ori")
        targets = AttackTargets(y_target=y_target, y_true=y_true, y_ori=y_ori,
                                weights=self.config.loss_weights,
                                loss_mode=self.config.loss_mode)
        return targets, tspec

    def attack_frame(self, pair: PatchPair, y_true: TrackTarget) -> AttackResult:
        """Attack one frame's inputs; returns the adversarial result."""
        cfg = self.config
        params = self.params
        mconf = params.config
        targets, tspec = self.build_targets(pair, y_true)
        budget = cfg.budget(mconf.modality)
        name = cfg.name

        if name == "noise":
            result = self._noise(pair, budget, targets)
        elif name == "fgsm":
            result = self._fgsm(pair, budget, targets)
        elif name == "pgd-rgb":
            warm = carry_plane(pair.x_rgb, self.state.eta_rgb, budget.eps,
                               cfg.temporal)
            self._record_warm_cold(pair, targets)
            result = pgd_rgb(pair, params, targets, budget, warm=warm)
            self.state.eta_rgb = result.pair.x_rgb - pair.x_rgb
        elif name == "pgd-frame":
            warm = carry_plane(pair.x_frame, self.state.eta_frame, budget.eps,
                               cfg.temporal)
            self._record_warm_cold(pair, targets)
            result = pgd_frame(pair, params, targets, budget, warm=warm)
            self.state.eta_frame = result.pair.x_frame - pair.x_frame
        elif name == "advinit":
            adv = pair.copy()
            adv.x_vox = adv_init_voxels(adv.x_vox, tspec, self._rng)
            loss, out = evaluate_objective(params, adv, targets)
            clean_loss, clean_out = evaluate_objective(params, pair, targets)
            result = AttackResult(pair=adv, loss_trace=[clean_loss, loss],
                                  box_before=clean_out.bbox, box_after=out.bbox)
        elif name == "voxel":
            adv = pair.copy()
            adv.x_vox = adv_init_voxels(adv.x_vox, tspec, self._rng)
            result = grad_opt_voxels(adv, params, targets, budget)
        elif name == "fusion-voxel":
            self._record_warm_cold(pair, targets)
            result = attack_rgb_event_voxel(
                pair, params, targets, budget, budget, tspec, self._rng,
                state=self.state, temporal_mode=cfg.temporal, order=cfg.order)
        elif name == "universal-frame":
            result = attack_rgb_event_frame_universal(
                pair, params, targets, budget, eta=self.universal_eta)
            self.universal_eta = result.etas["universal"]
        elif name == "ae-adv":
            result = baseline_ae_adv(pair, params, targets, budget, budget,
                                     tspec, self._rng)
        elif name == "dare-snn":
            result = baseline_dare_snn(pair, params, targets, budget, budget,
                                       tspec, self._rng)
        else:
            raise ConfigurationError(f"unknown attack {name!r}")
        self._frame_in_seq += 1
        return result

    def _record_warm_cold(self, pair, targets):
        """For temporal-carry validation: iteration-0 loss of the carried
        start vs the cold (clean) start on the same frame."""
        if self.config.temporal == "off" or self._frame_in_seq == 0:
            return
        cold_loss, _ = evaluate_objective(self.params, pair, targets)
        warm_pair = pair.copy()
        budget = self.config.budget(self.params.config.modality)
        if self.params.config.uses_rgb and self.state.eta_rgb is not None:
            warm_pair.x_rgb = carry_plane(pair.x_rgb, self.state.eta_rgb,
                                          budget.eps, self.config.temporal)
        if self.params.config.uses_frame and self.state.eta_frame is not None:
            warm_pair.x_frame = carry_plane(pair.x_frame, self.state.eta_frame,
                                            budget.eps, self.config.temporal)
        warm_loss, _ = evaluate_objective(self.params, warm_pair, targets)
        self.warm_cold.append((self._frame_in_seq, warm_loss, cold_loss))

    def _noise(self, pair, budget, targets) -> AttackResult:
        adv = pair.copy()
        seed = int(self._rng.integers(0, 2 ** 31))
        if self.params.config.uses_rgb:
            adv.x_rgb = noise_baseline(adv.x_rgb, budget.eps, seed)
        if self.params.config.uses_frame:
            adv.x_frame = noise_baseline(adv.x_frame, budget.eps, seed + 1)
        if self.params.config.uses_voxel:
            adv.x_vox = noise_voxels(adv.x_vox, budget.eps, seed + 2)
        clean_loss, clean_out = evaluate_objective(self.params, pair, targets)
        loss, out = evaluate_objective(self.params, adv, targets)
        return AttackResult(pair=adv, loss_trace=[clean_loss, loss],
                            box_before=clean_out.bbox, box_after=out.bbox)

    def _fgsm(self, pair, budget, targets) -> AttackResult:
        adv = pair.copy()
        traces = {}
        result = None
        if self.params.config.uses_rgb:
            result = fgsm(adv, self.params, targets, budget.eps, "x_rgb")
            adv.x_rgb = result.pair.x_rgb
            traces["rgb"] = result.loss_trace
        if self.params.config.uses_frame:
            result = fgsm(adv, self.params, targets, budget.eps, "x_frame")
            adv.x_frame = result.pair.x_frame
            traces["frame"] = result.loss_trace
        if self.params.config.uses_voxel and budget.eps > 0:
            one_step = AttackBudget(eps=budget.eps, alpha=budget.eps, iters=1)
            result = grad_opt_voxels(adv, self.params, targets, one_step)
            adv.x_vox = result.pair.x_vox
            traces["voxel"] = result.loss_trace
        if result is None:
            loss, out = evaluate_objective(self.params, pair, targets)
            return AttackResult(pair=adv, loss_trace=[loss, loss],
                                box_before=out.bbox, box_after=out.bbox)
        final_loss, out = evaluate_objective(self.params, adv, targets)
        return AttackResult(pair=adv, loss_trace=result.loss_trace,
                            box_before=result.box_before, box_after=out.bbox,
                            extra_traces=traces)
