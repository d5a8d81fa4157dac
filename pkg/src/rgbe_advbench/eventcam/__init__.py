"""Event-camera data: synthesis, voxelization, frames, file formats."""

from .frames import accumulate_event_frame
from .io import (
    ParseError,
    Sequence,
    load_events,
    load_groundtruth,
    load_ppm,
    load_sequence,
    save_events,
    save_groundtruth,
    save_ppm,
    save_sequence,
)
from .synth import ObjectSpec, SceneConfig, SceneError, frame_time_us, synthesize_sequence
from .types import EventDataError, EventFrame, EventPoint, EventStream, RgbFrame, VoxelSet
from .voxelize import GridSpec, count_invalid_voxels, voxelize

__all__ = [
    "EventDataError",
    "EventFrame",
    "EventPoint",
    "EventStream",
    "GridSpec",
    "ObjectSpec",
    "ParseError",
    "RgbFrame",
    "SceneConfig",
    "SceneError",
    "Sequence",
    "VoxelSet",
    "accumulate_event_frame",
    "count_invalid_voxels",
    "frame_time_us",
    "load_events",
    "load_groundtruth",
    "load_ppm",
    "load_sequence",
    "save_events",
    "save_groundtruth",
    "save_ppm",
    "save_sequence",
    "synthesize_sequence",
    "voxelize",
]
