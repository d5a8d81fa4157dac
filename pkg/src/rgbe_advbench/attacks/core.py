"""Single-modality attack primitives.

All iterative attacks share one convention: the attack loss (module
``losses``) is minimized, so the signed-gradient ascent steps written as
``x + alpha * sign(R)`` use ``R = grad(-L)``.  Projection keeps every
iterate inside the L-inf ball of radius eps around its anchor, then inside
the valid data range; with eps = 0 every attack is the exact identity.
"""

from __future__ import annotations

import numpy as np

from ..boxes import BBox
from ..diffmath import Recording, backward
from ..eventcam.types import VoxelSet
from ..eventcam.voxelize import count_invalid_voxels
from ..losses import attack_objective
from ..tracker.model import PatchPair, TrackerParams, forward, pair_nodes
from .types import AttackBudget, AttackError, AttackResult, AttackTargets, TargetSpec

RGB_RANGE = (0.0, 255.0)


def _project(values, anchor, eps, lo=None, hi=None):
    """Project into the L-inf eps ball around anchor, then the value range.

    ``anchor + clip(...)`` can overshoot the ball by an ulp when the sum
    rounds; overshooting entries are nudged back toward the anchor so the
    materialized deviation is exactly <= eps.  The range clip never undoes
    this because the anchor itself lies in range.
    """
    out = anchor + np.clip(values - anchor, -eps, eps)
    if lo is not None:
        out = np.clip(out, lo, hi)
    over = np.abs(out - anchor) > eps
    while np.any(over):
        out = np.where(over, np.nextafter(out, anchor), out)
        over = np.abs(out - anchor) > eps
    return out


def _check_budget(values, anchor, eps, what, iteration):
    if np.max(np.abs(values - anchor)) > eps:
        raise AttackError(
            f"{what} deviation exceeds eps={eps} at iteration {iteration}")


def evaluate_objective(params: TrackerParams, pair: PatchPair,
                       targets: AttackTargets):
    """Attack loss and prediction on the current inputs (no gradients)."""
    rec = Recording()
    nodes = pair_nodes(rec, pair, params.config)
    res = forward(rec, params, nodes)
    loss = attack_objective(res, targets.y_target, targets.y_true, targets.y_ori,
                            targets.weights, params.config.search_size,
                            targets.loss_mode)
    return float(loss.value), res.to_output()


def _loss_and_grad(params: TrackerParams, pair: PatchPair, leaf_key: str,
                   targets: AttackTargets):
    rec = Recording()
    nodes = pair_nodes(rec, pair, params.config, leaves=(leaf_key,))
    res = forward(rec, params, nodes)
    loss = attack_objective(res, targets.y_target, targets.y_true, targets.y_ori,
                            targets.weights, params.config.search_size,
                            targets.loss_mode)
    grad = backward(loss)[nodes[leaf_key]]
    return float(loss.value), grad, res.to_output()


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

def noise_baseline(values: np.ndarray, eps: float, seed: int,
                   valid_range=RGB_RANGE) -> np.ndarray:
    """Uniform noise in [-eps, eps], clamped to the valid range."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    rng = np.random.default_rng(seed)
    bumped = values + rng.uniform(-eps, eps, size=values.shape)
    return _project(bumped, values, eps, valid_range[0], valid_range[1])


def noise_voxels(voxels: VoxelSet, eps: float, seed: int) -> VoxelSet:
    """Uniform coordinate jitter of occupied slots, clamped to the grid."""
    rng = np.random.default_rng(seed)
    out = voxels.copy()
    n = out.occupied
    gx, gy, gz = out.grid_dims
    upper = np.array([gx, gy, gz], dtype=np.float64) - 1.0
    bumped = out.coords[:n] + rng.uniform(-eps, eps, size=(n, 3))
    out.coords[:n] = _project(bumped, out.coords[:n], eps, 0.0, upper[None, :])
    return out


# ---------------------------------------------------------------------------
# pixel-grid attacks (RGB patches and event-frame patches)
# ---------------------------------------------------------------------------

def _pgd_plane(params, pair, leaf_key, targets, budget, warm,
               clean) -> AttackResult:
    cur = clean.copy() if warm is None else warm.copy()
    _check_budget(cur, clean, budget.eps, leaf_key, 0)
    trace = []
    box_before = None
    work = pair.copy()
    for m in range(budget.iters):
        setattr(work, leaf_key, cur)
        loss, grad, out = _loss_and_grad(params, work, leaf_key, targets)
        if not np.all(np.isfinite(grad)):
            raise AttackError(f"non-finite gradient at iteration {m}")
        if box_before is None:
            box_before = out.bbox
        trace.append(loss)
        stepped = cur + budget.alpha * np.sign(-grad)
        cur = _project(stepped, clean, budget.eps, *RGB_RANGE)
        _check_budget(cur, clean, budget.eps, leaf_key, m + 1)
    setattr(work, leaf_key, cur)
    final_loss, out_after = evaluate_objective(params, work, targets)
    trace.append(final_loss)
    return AttackResult(pair=work, loss_trace=trace, box_before=box_before,
                        box_after=out_after.bbox,
                        etas={leaf_key: cur - clean})


def pgd_rgb(pair: PatchPair, params: TrackerParams, targets: AttackTargets,
            budget: AttackBudget, warm: np.ndarray = None) -> AttackResult:
    """Iterated signed-gradient attack on the RGB search patch.

    The projection anchor is the clean patch in ``pair``; ``warm`` is an
    optional already-projected starting point (temporal carry).
    """
    return _pgd_plane(params, pair, "x_rgb", targets, budget, warm, pair.x_rgb)


def pgd_frame(pair: PatchPair, params: TrackerParams, targets: AttackTargets,
              budget: AttackBudget, warm: np.ndarray = None) -> AttackResult:
    """Event-frame variant of :func:`pgd_rgb` (same update, one channel)."""
    return _pgd_plane(params, pair, "x_frame", targets, budget, warm, pair.x_frame)


def fgsm(pair: PatchPair, params: TrackerParams, targets: AttackTargets,
         eps: float, leaf_key: str = "x_rgb") -> AttackResult:
    """Single signed-gradient step of magnitude eps; bit-identical to the
    one-iteration projected attack with alpha = eps."""
    if eps == 0:
        clean = getattr(pair, leaf_key)
        loss, out = evaluate_objective(params, pair, targets)
        return AttackResult(pair=pair.copy(), loss_trace=[loss, loss],
                            box_before=out.bbox, box_after=out.bbox,
                            etas={leaf_key: np.zeros_like(clean)})
    budget = AttackBudget(eps=eps, alpha=eps, iters=1)
    clean = getattr(pair, leaf_key)
    return _pgd_plane(params, pair, leaf_key, targets, budget, None, clean)


# ---------------------------------------------------------------------------
# voxel attacks
# ---------------------------------------------------------------------------

def adv_init_voxels(voxels: VoxelSet, target: TargetSpec, rng,
                    patch_size: float = None) -> VoxelSet:
    """Fill every padding slot with a synthetic voxel inside the target box.

    Spatial cells are drawn uniformly over the cells the box covers,
    temporal bins uniformly over the grid depth; features are +1.  Original
    voxels are untouched; a fully occupied set passes through unchanged.
    """
    n_v = count_invalid_voxels(voxels)
    out = voxels.copy()
    if n_v == 0:
        return out
    gx, gy, gz = out.grid_dims
    cell = out.cell_px
    b = target.box
    x_lo = int(np.clip(np.floor(b.x / cell), 0, gx - 1))
    x_hi = int(np.clip(np.ceil(b.x2 / cell) - 1, x_lo, gx - 1))
    y_lo = int(np.clip(np.floor(b.y / cell), 0, gy - 1))
    y_hi = int(np.clip(np.ceil(b.y2 / cell) - 1, y_lo, gy - 1))
    n0 = out.occupied
    out.coords[n0:, 0] = rng.integers(x_lo, x_hi + 1, size=n_v)
    out.coords[n0:, 1] = rng.integers(y_lo, y_hi + 1, size=n_v)
    out.coords[n0:, 2] = rng.integers(0, gz, size=n_v)
    out.feats[n0:] = 1.0
    out.occupied = out.n_cap
    return out


def _grid_upper(voxels: VoxelSet) -> np.ndarray:
    gx, gy, gz = voxels.grid_dims
    return np.array([gx, gy, gz], dtype=np.float64) - 1.0


def _voxel_attack_loop(pair, params, targets, budget, anchor_coords,
                       anchor_feats, warm_coords, axes=None,
                       optimize_feats=False, feat_bound=None):
    """Shared PGD loop over voxel slots.

    ``axes`` restricts coordinate updates to a subset of (x, y, z);
    ``optimize_feats`` switches the attack surface to the features.  The
    projection anchor is the initialized (post-injection) set.
    """
    work = pair.copy()
    vox = work.x_vox
    active = vox.active_mask()[:, None]
    upper = _grid_upper(vox)
    if warm_coords is not None:
        vox.coords = warm_coords.copy()
    trace = []
    box_before = None
    leaf = "x_vox_feats" if optimize_feats else "x_vox_coords"
    for m in range(budget.iters):
        loss, grad, out = _loss_and_grad(params, work, leaf, targets)
        if not np.all(np.isfinite(grad)):
            raise AttackError(f"non-finite gradient at iteration {m}")
        if box_before is None:
            box_before = out.bbox
        trace.append(loss)
        if optimize_feats:
            stepped = vox.feats + budget.alpha * np.sign(-grad) * active[:, 0]
            feats = _project(stepped, anchor_feats, budget.eps)
            if feat_bound is not None:
                feats = np.clip(feats, -feat_bound, feat_bound)
            _check_budget(feats, anchor_feats, budget.eps, "voxel feature", m + 1)
            vox.feats = feats
        else:
            step = budget.alpha * np.sign(-grad) * active
            if axes is not None:
                mask = np.zeros(3)
                mask[list(axes)] = 1.0
                step = step * mask[None, :]
            coords = _project(vox.coords + step, anchor_coords, budget.eps)
            coords = np.clip(coords, 0.0, upper[None, :])
            _check_budget(coords, anchor_coords, budget.eps, "voxel coordinate", m + 1)
            vox.coords = coords
    final_loss, out_after = evaluate_objective(params, work, targets)
    trace.append(final_loss)
    eta_key = "x_vox_feats" if optimize_feats else "x_vox_coords"
    eta = (vox.feats - anchor_feats) if optimize_feats else (vox.coords - anchor_coords)
    return AttackResult(pair=work, loss_trace=trace, box_before=box_before,
                        box_after=out_after.bbox, etas={eta_key: eta})


def grad_opt_voxels(pair: PatchPair, params: TrackerParams,
                    targets: AttackTargets, budget: AttackBudget,
                    warm_coords: np.ndarray = None,
                    axes=None) -> AttackResult:
    """Projected signed-gradient optimization of voxel coordinates.

    Operates on the continuous (vx, vy, vz) of every occupied slot of
    ``pair.x_vox`` (normally the output of :func:`adv_init_voxels`);
    features and padding slots are untouched.  Offsets stay inside the eps
    ball around the initialized coordinates and inside the grid.
    """
    vox = pair.x_vox
    return _voxel_attack_loop(pair, params, targets, budget,
                              anchor_coords=vox.coords.copy(),
                              anchor_feats=vox.feats.copy(),
                              warm_coords=warm_coords, axes=axes)


# ---------------------------------------------------------------------------
# temporal carry
# ---------------------------------------------------------------------------

def carry_plane(clean_t: np.ndarray, eta_prev, eps: float, mode: str = "on",
                valid_range=RGB_RANGE) -> np.ndarray:
    """Apply a carried pixel perturbation to a fresh clean input, projected
    into the eps ball and the valid range."""
    if mode == "off" or eta_prev is None:
        return clean_t.copy()
    if mode not in ("on", "eq5-literal"):
        raise ValueError(f"unknown temporal mode {mode!r}")
    off = eta_prev if mode == "on" else -eta_prev
    return _project(clean_t + off, clean_t, eps, valid_range[0], valid_range[1])


def temporal_carry(clean_t: np.ndarray, clean_prev, adv_prev, eps: float,
                   mode: str = "on", valid_range=RGB_RANGE) -> np.ndarray:
    """Warm-start frame t from the previous frame's perturbation.

    ``mode`` "on" adds the previous offset (prose reading); "eq5-literal"
    subtracts it; "off" or a missing previous frame returns the clean input.
    The offset is projected into the eps ball before application.
    """
    if adv_prev is None:
        return clean_t.copy()
    return carry_plane(clean_t, adv_prev - clean_prev, eps, mode, valid_range)


def carry_voxel_coords(init_coords: np.ndarray, active: np.ndarray,
                       eta_prev: np.ndarray, eps: float, upper: np.ndarray,
                       mode: str = "on") -> np.ndarray:
    """Slot-aligned voxel-coordinate warm start, projected into budget."""
    if mode == "off" or eta_prev is None:
        return init_coords.copy()
    if mode not in ("on", "eq5-literal"):
        raise ValueError(f"unknown temporal mode {mode!r}")
    eta = (eta_prev if mode == "on" else -eta_prev) * active[:, None]
    out = _project(init_coords + eta, init_coords, eps)
    return np.clip(out, 0.0, upper[None, :])


# ---------------------------------------------------------------------------
# relaxed polarity sampling
# ---------------------------------------------------------------------------

def gumbel_softmax_sign(rng, n: int, temperature: float = 1.0) -> np.ndarray:
    """Relaxed two-class (+1 / -1) samples via Gumbel-Softmax.

    Symmetric logits; returns values in (-1, 1) whose sign is the hard
    sample.  At temperature 1.0 the hard classes are balanced.
    """
    g = rng.gumbel(size=(n, 2))
    z = g / temperature
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs[:, 0] - probs[:, 1]
