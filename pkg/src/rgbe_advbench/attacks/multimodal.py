"""Cross-modal attacks: joint RGB + voxel optimization, the shared
universal perturbation for RGB + event-frame inputs, and the two
event-stream baselines transplanted onto the voxel pipeline."""

from __future__ import annotations

import numpy as np

from ..tracker.model import PatchPair, TrackerParams
from .core import (
    RGB_RANGE,
    _check_budget,
    _grid_upper,
    _loss_and_grad,
    _voxel_attack_loop,
    adv_init_voxels,
    carry_plane,
    carry_voxel_coords,
    evaluate_objective,
    gumbel_softmax_sign,
    grad_opt_voxels,
    pgd_rgb,
)
from .types import (
    AttackBudget,
    AttackError,
    AttackResult,
    AttackTargets,
    PerturbationState,
    TargetSpec,
)


def attack_rgb_event_voxel(pair: PatchPair, params: TrackerParams,
                           targets: AttackTargets, rgb_budget: AttackBudget,
                           vox_budget: AttackBudget, target_spec: TargetSpec,
                           rng, state: PerturbationState = None,
                           temporal_mode: str = "off",
                           order: str = "rgb-first") -> AttackResult:
    """Joint attack on an RGB + voxel pair, one frame.

    Padding slots are filled inside the target region first, both carried
    perturbations are applied, then the RGB and voxel inner loops run
    sequentially against the joint model, each holding the other modality
    at its current adversarial value.  Updates ``state`` in place with the
    new per-modality perturbations.
    """
    if order not in ("rgb-first", "voxel-first"):
        raise ValueError(f"unknown inner-loop order {order!r}")
    state = state if state is not None else PerturbationState()
    work = pair.copy()
    clean_rgb = pair.x_rgb

    work.x_vox = adv_init_voxels(work.x_vox, target_spec, rng)
    init_coords = work.x_vox.coords.copy()
    upper = _grid_upper(work.x_vox)

    warm_rgb = carry_plane(clean_rgb, state.eta_rgb, rgb_budget.eps,
                           mode=temporal_mode)
    warm_coords = carry_voxel_coords(init_coords, work.x_vox.active_mask(),
                                     state.eta_vox, vox_budget.eps, upper,
                                     mode=temporal_mode)

    def run_rgb(current: PatchPair):
        res = pgd_rgb(current, params, targets, rgb_budget, warm=warm_rgb)
        current.x_rgb = res.pair.x_rgb
        return res

    def run_vox(current: PatchPair):
        res = grad_opt_voxels(current, params, targets, vox_budget,
                              warm_coords=warm_coords)
        current.x_vox = res.pair.x_vox
        return res

    stage = pair.copy()
    stage.x_vox = work.x_vox
    stage.x_rgb = clean_rgb
    if order == "rgb-first":
        rgb_res = run_rgb(stage)
        vox_res = run_vox(stage)
        primary, secondary = vox_res, rgb_res
    else:
        vox_res = run_vox(stage)
        rgb_res = run_rgb(stage)
        primary, secondary = rgb_res, vox_res

    state.eta_rgb = stage.x_rgb - clean_rgb
    state.eta_vox = stage.x_vox.coords - init_coords

    return AttackResult(
        pair=stage, loss_trace=primary.loss_trace,
        box_before=secondary.box_before, box_after=primary.box_after,
        etas={"x_rgb": state.eta_rgb, "x_vox_coords": state.eta_vox},
        extra_traces={"rgb": rgb_res.loss_trace, "voxel": vox_res.loss_trace})


def attack_rgb_event_frame_universal(pair: PatchPair, params: TrackerParams,
                                     targets: AttackTargets,
                                     budget: AttackBudget,
                                     eta: np.ndarray = None) -> AttackResult:
    """Two-step universal perturbation over RGB and event-frame branches.

    One single-channel grid ``eta`` serves both modalities and persists
    across frames.  Each iteration takes a signed-gradient step on eta
    through the RGB branch (channel-summed gradient), clips it to
    [-eps, eps], then repeats through the event-frame branch.  Outputs are
    the clean inputs plus the final eta, clamped to the display range.
    """
    clean_rgb = pair.x_rgb
    clean_frame = pair.x_frame
    if eta is None:
        eta = np.zeros_like(clean_frame)
    else:
        eta = np.clip(eta, -budget.eps, budget.eps)

    work = pair.copy()
    trace = []
    box_before = None
    for m in range(budget.iters):
        work.x_rgb = np.clip(clean_rgb + eta[:, :, None], *RGB_RANGE)
        work.x_frame = np.clip(clean_frame + eta, *RGB_RANGE)
        loss, grad, out = _loss_and_grad(params, work, "x_rgb", targets)
        if not np.all(np.isfinite(grad)):
            raise AttackError(f"non-finite rgb gradient at iteration {m}")
        if box_before is None:
            box_before = out.bbox
        trace.append(loss)
        if budget.eps > 0:
            eta = np.clip(eta + budget.alpha * np.sign(-grad.sum(axis=2)),
                          -budget.eps, budget.eps)
        _check_budget(eta, np.zeros_like(eta), budget.eps, "universal eta", m + 1)

        work.x_rgb = np.clip(clean_rgb + eta[:, :, None], *RGB_RANGE)
        work.x_frame = np.clip(clean_frame + eta, *RGB_RANGE)
        _, grad_f, _ = _loss_and_grad(params, work, "x_frame", targets)
        if not np.all(np.isfinite(grad_f)):
            raise AttackError(f"non-finite frame gradient at iteration {m}")
        if budget.eps > 0:
            eta = np.clip(eta + budget.alpha * np.sign(-grad_f),
                          -budget.eps, budget.eps)
        _check_budget(eta, np.zeros_like(eta), budget.eps, "universal eta", m + 1)

    work.x_rgb = np.clip(clean_rgb + eta[:, :, None], *RGB_RANGE)
    work.x_frame = np.clip(clean_frame + eta, *RGB_RANGE)
    final_loss, out_after = evaluate_objective(params, work, targets)
    trace.append(final_loss)
    return AttackResult(pair=work, loss_trace=trace, box_before=box_before,
                        box_after=out_after.bbox,
                        etas={"universal": eta.copy()})


def baseline_ae_adv(pair: PatchPair, params: TrackerParams,
                    targets: AttackTargets, rgb_budget: AttackBudget,
                    vox_budget: AttackBudget, target_spec: TargetSpec,
                    rng) -> AttackResult:
    """Timestamp-shifting baseline: after null-voxel injection only the
    temporal coordinate moves; when the model is multimodal, the RGB branch
    runs the standard projected attack."""
    work = pair.copy()
    work.x_vox = adv_init_voxels(work.x_vox, target_spec, rng)

    rgb_res = None
    if params.config.uses_rgb:
        rgb_res = pgd_rgb(work, params, targets, rgb_budget)
        work.x_rgb = rgb_res.pair.x_rgb

    vox_res = _voxel_attack_loop(work, params, targets, vox_budget,
                                 anchor_coords=work.x_vox.coords.copy(),
                                 anchor_feats=work.x_vox.feats.copy(),
                                 warm_coords=None, axes=(2,))
    work.x_vox = vox_res.pair.x_vox
    etas = dict(vox_res.etas)
    extra = {}
    if rgb_res is not None:
        etas.update(rgb_res.etas)
        extra["rgb"] = rgb_res.loss_trace
    before = rgb_res.box_before if rgb_res is not None else vox_res.box_before
    return AttackResult(pair=work, loss_trace=vox_res.loss_trace,
                        box_before=before, box_after=vox_res.box_after,
                        etas=etas, extra_traces=extra)


def baseline_dare_snn(pair: PatchPair, params: TrackerParams,
                      targets: AttackTargets, rgb_budget: AttackBudget,
                      vox_budget: AttackBudget, target_spec: TargetSpec,
                      rng) -> AttackResult:
    """Polarity-optimizing baseline: injected voxels get relaxed random
    polarities, then only the features move under gradient, clamped to the
    per-cell polarity bound; coordinates stay frozen; when the model is
    multimodal, the RGB branch runs the standard projected attack."""
    work = pair.copy()
    n_before = work.x_vox.occupied
    work.x_vox = adv_init_voxels(work.x_vox, target_spec, rng)
    n_injected = work.x_vox.occupied - n_before
    if n_injected > 0:
        work.x_vox.feats[n_before:n_before + n_injected] = \
            gumbel_softmax_sign(rng, n_injected, temperature=1.0)

    rgb_res = None
    if params.config.uses_rgb:
        rgb_res = pgd_rgb(work, params, targets, rgb_budget)
        work.x_rgb = rgb_res.pair.x_rgb

    vox_res = _voxel_attack_loop(work, params, targets, vox_budget,
                                 anchor_coords=work.x_vox.coords.copy(),
                                 anchor_feats=work.x_vox.feats.copy(),
                                 warm_coords=None, optimize_feats=True,
                                 feat_bound=float(work.x_vox.k_max))
    work.x_vox = vox_res.pair.x_vox
    etas = dict(vox_res.etas)
    extra = {}
    if rgb_res is not None:
        etas.update(rgb_res.etas)
        extra["rgb"] = rgb_res.loss_trace
    before = rgb_res.box_before if rgb_res is not None else vox_res.box_before
    return AttackResult(pair=work, loss_trace=vox_res.loss_trace,
                        box_before=before, box_after=vox_res.box_after,
                        etas=etas, extra_traces=extra)
