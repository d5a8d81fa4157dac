"""Attack procedures: baselines, projected-gradient attacks on pixels and
voxels, temporal carry, cross-modal fusion, universal perturbation."""

from .core import (
    RGB_RANGE,
    adv_init_voxels,
    carry_plane,
    carry_voxel_coords,
    evaluate_objective,
    fgsm,
    grad_opt_voxels,
    gumbel_softmax_sign,
    noise_baseline,
    noise_voxels,
    pgd_frame,
    pgd_rgb,
    temporal_carry,
)
from .multimodal import (
    attack_rgb_event_frame_universal,
    attack_rgb_event_voxel,
    baseline_ae_adv,
    baseline_dare_snn,
)
from .runner import ATTACK_NAMES, AttackConfig, AttackRunner
from .types import (
    MULTIMODAL_EPS,
    UNIMODAL_EPS,
    AttackBudget,
    AttackError,
    AttackResult,
    AttackTargets,
    PerturbationState,
    TargetSpec,
    far_quadrant_target,
)

__all__ = [
    "ATTACK_NAMES",
    "AttackBudget",
    "AttackConfig",
    "AttackError",
    "AttackResult",
    "AttackRunner",
    "AttackTargets",
    "MULTIMODAL_EPS",
    "PerturbationState",
    "RGB_RANGE",
    "TargetSpec",
    "UNIMODAL_EPS",
    "adv_init_voxels",
    "attack_rgb_event_frame_universal",
    "attack_rgb_event_voxel",
    "baseline_ae_adv",
    "baseline_dare_snn",
    "carry_plane",
    "carry_voxel_coords",
    "evaluate_objective",
    "far_quadrant_target",
    "fgsm",
    "grad_opt_voxels",
    "gumbel_softmax_sign",
    "noise_baseline",
    "noise_voxels",
    "pgd_frame",
    "pgd_rgb",
    "temporal_carry",
]
