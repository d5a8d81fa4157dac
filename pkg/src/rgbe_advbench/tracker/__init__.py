"""Differentiable surrogate tracker: model, patches, training, checkpoints."""

from ..boxes import BBox
from .checkpoint import CheckpointError, ChecksumError, VersionError, load_params, save_params
from .model import (
    MODALITIES,
    ConfigurationError,
    ForwardResult,
    PatchPair,
    TrackerConfig,
    TrackerOutput,
    TrackerParams,
    embed_frame,
    embed_rgb,
    embed_voxels,
    forward,
    init_params,
    pair_nodes,
    predict,
    weight_nodes,
    weight_shapes,
)
from .patches import CropError, CropGeometry, crop_plane, crop_rgb, crop_voxels, square_region
from .sampling import build_pair, build_template, event_display_frame, frame_voxels, grid_for
from .train import LabeledPair, TrainConfig, TrainingError, build_dataset, train

__all__ = [
    "BBox",
    "CheckpointError",
    "ChecksumError",
    "ConfigurationError",
    "CropError",
    "CropGeometry",
    "ForwardResult",
    "LabeledPair",
    "MODALITIES",
    "PatchPair",
    "TrackerConfig",
    "TrackerOutput",
    "TrackerParams",
    "TrainConfig",
    "TrainingError",
    "VersionError",
    "build_dataset",
    "build_pair",
    "build_template",
    "crop_plane",
    "crop_rgb",
    "crop_voxels",
    "embed_frame",
    "embed_rgb",
    "embed_voxels",
    "event_display_frame",
    "forward",
    "frame_voxels",
    "grid_for",
    "init_params",
    "load_params",
    "pair_nodes",
    "predict",
    "save_params",
    "square_region",
    "train",
    "weight_nodes",
    "weight_shapes",
]
