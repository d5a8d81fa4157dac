"""Template/search patch extraction and coordinate mapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..boxes import BBox
from ..eventcam.types import VoxelSet


class CropError(ValueError):
    """Requested crop region does not intersect the frame."""


@dataclass(frozen=True)
class CropGeometry:
    """Square crop region in frame coordinates resampled to a patch."""
    region_x: float
    region_y: float
    region_side: float
    patch_size: int

    @property
    def scale(self) -> float:
        return self.patch_size / self.region_side

    def frame_to_patch(self, box: BBox) -> BBox:
        s = self.scale
        return BBox((box.x - self.region_x) * s, (box.y - self.region_y) * s,
                    box.w * s, box.h * s)

    def patch_to_frame(self, box: BBox) -> BBox:
        s = self.scale
        return BBox(box.x / s + self.region_x, box.y / s + self.region_y,
                    box.w / s, box.h / s)


def square_region(box: BBox, scale_factor: float, patch_size: int) -> CropGeometry:
    side = scale_factor * float(np.sqrt(box.w * box.h))
    side = max(side, 1e-6)
    return CropGeometry(box.cx - side / 2.0, box.cy - side / 2.0, side, patch_size)


def _check_overlap(geom: CropGeometry, width: int, height: int):
    if (geom.region_x >= width or geom.region_y >= height
            or geom.region_x + geom.region_side <= 0
            or geom.region_y + geom.region_side <= 0):
        raise CropError("crop region lies fully outside the frame")


def _bilinear(img: np.ndarray, sx: np.ndarray, sy: np.ndarray, fill):
    """Sample img at continuous (sx, sy); positions outside the pixel grid
    take the fill value."""
    h, w = img.shape[:2]
    inside = (sx > -0.5) & (sx < w - 0.5) & (sy > -0.5) & (sy < h - 0.5)
    cx = np.clip(sx, 0.0, w - 1.0)
    cy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.clip(np.floor(cx).astype(int), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(cy).astype(int), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = cx - x0
    fy = cy - y0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    out = (img[y0, x0] * (1 - fx) * (1 - fy) + img[y0, x1] * fx * (1 - fy)
           + img[y1, x0] * (1 - fx) * fy + img[y1, x1] * fx * fy)
    out[~inside] = fill
    return out


def _sample_coords(geom: CropGeometry):
    p = geom.patch_size
    step = geom.region_side / p
    sx = geom.region_x + (np.arange(p) + 0.5) * step - 0.5
    sy = geom.region_y + (np.arange(p) + 0.5) * step - 0.5
    return np.meshgrid(sx, sy)


def crop_rgb(values: np.ndarray, box: BBox, scale_factor: float,
             patch_size: int):
    """Bilinear square crop of an (H, W, 3) image around a box; the region
    side is scale_factor * sqrt(w*h).  Out-of-frame samples take the
    channel mean.  Returns (patch, geometry)."""
    geom = square_region(box, scale_factor, patch_size)
    _check_overlap(geom, values.shape[1], values.shape[0])
    sx, sy = _sample_coords(geom)
    fill = values.reshape(-1, 3).mean(axis=0)
    return _bilinear(values, sx, sy, fill), geom


def crop_plane(values: np.ndarray, box: BBox, scale_factor: float,
               patch_size: int):
    """Single-channel variant of :func:`crop_rgb` (event frames)."""
    geom = square_region(box, scale_factor, patch_size)
    _check_overlap(geom, values.shape[1], values.shape[0])
    sx, sy = _sample_coords(geom)
    return _bilinear(values, sx, sy, float(values.mean())), geom


def crop_voxels(voxels: VoxelSet, box: BBox, scale_factor: float,
                patch_size: int, frame_size: tuple):
    """Re-express voxels in patch coordinates; drop those outside the patch
    and re-pad to capacity.  Temporal coordinates and features pass through
    unchanged.  Returns (VoxelSet, geometry)."""
    geom = square_region(box, scale_factor, patch_size)
    _check_overlap(geom, frame_size[0], frame_size[1])
    gx, gy, gz = voxels.grid_dims
    cell = voxels.cell_px
    f = geom.scale
    active = voxels.active_mask()
    # voxel cell centers in frame px -> patch px -> patch cell units
    px = ((voxels.coords[:, 0] + 0.5) * cell - geom.region_x) * f
    py = ((voxels.coords[:, 1] + 0.5) * cell - geom.region_y) * f
    keep = active & (px >= 0) & (px < patch_size) & (py >= 0) & (py < patch_size)
    n = int(keep.sum())
    pg = patch_size // int(cell)
    out = VoxelSet.empty(voxels.n_cap, (pg, pg, gz), cell, voxels.bin_us,
                         voxels.k_max)
    out.coords[:n, 0] = px[keep] / cell - 0.5
    out.coords[:n, 1] = py[keep] / cell - 0.5
    out.coords[:n, 2] = voxels.coords[keep, 2]
    out.feats[:n] = voxels.feats[keep]
    out.occupied = n
    return out, geom
