"""Event stream to voxel-set quantization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import EventStream, VoxelSet


@dataclass(frozen=True)
class GridSpec:
    """Voxel grid parameters: spatial cell size in pixels, temporal bin
    count over the window, slot capacity, per-cell event cap."""
    cell_px: int = 4
    n_bins: int = 8
    n_cap: int = 1024
    k_max: int = 8

    def __post_init__(self):
        if self.cell_px <= 0 or self.n_bins <= 0:
            raise ValueError("grid cell sizes must be positive")
        if self.n_cap <= 0 or self.k_max <= 0:
            raise ValueError("n_cap and k_max must be positive")


def voxelize(events: EventStream, window: tuple, grid: GridSpec) -> VoxelSet:
    """Quantize in-window events onto the (x, y, t) grid.

    Each event lands in exactly one integer cell; at most ``k_max`` earliest
    events per cell are retained and their polarities summed into the cell
    feature.  Cells are ordered by first-event time (stable in arrival
    order); the earliest ``n_cap`` cells are kept, the rest of the slots
    stay zero.
    """
    lo, hi = int(window[0]), int(window[1])
    gx = -(-events.width // grid.cell_px)   # ceil division
    gy = -(-events.height // grid.cell_px)
    gz = grid.n_bins
    span = hi - lo
    bin_us = span / gz if span > 0 else 1.0
    out = VoxelSet.empty(grid.n_cap, (gx, gy, gz), grid.cell_px, bin_us, grid.k_max)

    mask = events.window_mask(lo, hi)
    if not mask.any():
        return out

    ex = events.x[mask] // grid.cell_px
    ey = events.y[mask] // grid.cell_px
    if span > 0:
        ez = np.minimum((events.t[mask] - lo) * gz // span, gz - 1)
    else:
        ez = np.zeros_like(ex)
    ep = events.p[mask]

    key = (ez * gy + ey) * gx + ex
    _, first_idx, inverse = np.unique(key, return_index=True, return_inverse=True)

    # rank of each event within its cell, in arrival order
    order = np.argsort(inverse, kind="stable")
    ranks = np.empty(len(key), dtype=np.int64)
    grouped = inverse[order]
    starts = np.flatnonzero(np.r_[True, grouped[1:] != grouped[:-1]])
    lengths = np.diff(np.r_[starts, len(grouped)])
    ranks[order] = np.arange(len(key)) - np.repeat(starts, lengths)

    retained = ranks < grid.k_max
    feats = np.bincount(inverse[retained], weights=ep[retained],
                        minlength=len(first_idx))

    cell_order = np.argsort(first_idx, kind="stable")[:grid.n_cap]
    n = len(cell_order)
    sel = first_idx[cell_order]
    out.coords[:n, 0] = ex[sel]
    out.coords[:n, 1] = ey[sel]
    out.coords[:n, 2] = ez[sel]
    out.feats[:n] = feats[cell_order]
    out.occupied = n
    return out


def count_invalid_voxels(voxels: VoxelSet) -> int:
    """Number of zero-padded slots."""
    return voxels.n_cap - voxels.occupied
