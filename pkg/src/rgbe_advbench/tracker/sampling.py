"""Assemble tracker inputs (template/search patch pairs) from sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..boxes import BBox
from ..eventcam.frames import accumulate_event_frame
from ..eventcam.io import Sequence
from ..eventcam.voxelize import GridSpec, voxelize
from .model import PatchPair, TrackerConfig
from .patches import CropGeometry, crop_plane, crop_rgb, crop_voxels

FRAME_DISPLAY_GAIN = 40.0


def grid_for(config: TrackerConfig) -> GridSpec:
    return GridSpec(cell_px=config.cell_px, n_bins=config.n_bins,
                    n_cap=config.n_cap, k_max=config.k_max)


def frame_voxels(seq: Sequence, frame_idx: int, grid: GridSpec, cache: dict = None):
    """Full-frame voxelization of the inter-frame window feeding frame_idx."""
    if cache is not None and frame_idx in cache:
        return cache[frame_idx]
    vs = voxelize(seq.events, seq.inter_frame_window(frame_idx), grid)
    if cache is not None:
        cache[frame_idx] = vs
    return vs


def event_display_frame(seq: Sequence, frame_idx: int) -> np.ndarray:
    ef = accumulate_event_frame(seq.events, seq.inter_frame_window(frame_idx))
    return ef.to_display(FRAME_DISPLAY_GAIN)


@dataclass
class TemplateSet:
    z_rgb: np.ndarray = None
    z_vox: object = None
    z_frame: np.ndarray = None


def build_template(seq: Sequence, frame_idx: int, box: BBox,
                   config: TrackerConfig, vox_cache: dict = None) -> TemplateSet:
    tpl = TemplateSet()
    if config.uses_rgb:
        tpl.z_rgb, _ = crop_rgb(seq.frames[frame_idx].values, box,
                                config.template_scale, config.template_size)
    if config.uses_voxel:
        vs = frame_voxels(seq, frame_idx, grid_for(config), vox_cache)
        frame_size = (seq.events.width, seq.events.height)
        tpl.z_vox, _ = crop_voxels(vs, box, config.template_scale,
                                   config.template_size, frame_size)
    if config.uses_frame:
        ef = event_display_frame(seq, frame_idx)
        tpl.z_frame, _ = crop_plane(ef, box, config.template_scale,
                                    config.template_size)
    return tpl


def build_pair(seq: Sequence, frame_idx: int, center_box: BBox,
               template: TemplateSet, config: TrackerConfig,
               vox_cache: dict = None):
    """Search crop around ``center_box`` combined with a prebuilt template.

    Returns (PatchPair, search CropGeometry)."""
    pair = PatchPair(modality=config.modality, z_rgb=template.z_rgb,
                     z_vox=template.z_vox, z_frame=template.z_frame)
    geom = None
    if config.uses_rgb:
        pair.x_rgb, geom = crop_rgb(seq.frames[frame_idx].values, center_box,
                                    config.search_scale, config.search_size)
    if config.uses_voxel:
        vs = frame_voxels(seq, frame_idx, grid_for(config), vox_cache)
        frame_size = (seq.events.width, seq.events.height)
        pair.x_vox, geom_v = crop_voxels(vs, center_box, config.search_scale,
                                         config.search_size, frame_size)
        geom = geom or geom_v
    if config.uses_frame:
        ef = event_display_frame(seq, frame_idx)
        pair.x_frame, geom_f = crop_plane(ef, center_box, config.search_scale,
                                          config.search_size)
        geom = geom or geom_f
    return pair, geom
