"""Core event-camera data containers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EventDataError(ValueError):
    """Malformed event data (bad polarity, coordinates out of range, ...)."""


@dataclass(frozen=True)
class EventPoint:
    """One brightness-change event: pixel (x, y), time t in microseconds,
    polarity p in {-1, +1}."""
    x: int
    y: int
    t: int
    p: int

    def __post_init__(self):
        if self.p not in (-1, 1):
            raise EventDataError(f"polarity must be -1 or +1, got {self.p}")
        if self.t < 0:
            raise EventDataError(f"timestamp must be non-negative, got {self.t}")


class EventStream:
    """Time-ordered events with sensor geometry.

    Internally column arrays (t, x, y, p) for vectorized windowing; the
    sequence protocol yields :class:`EventPoint` views.
    """

    def __init__(self, width: int, height: int, t_start: int, t_end: int,
                 t=None, x=None, y=None, p=None):
        if t_end < t_start:
            raise EventDataError("t_end before t_start")
        self.width = int(width)
        self.height = int(height)
        self.t_start = int(t_start)
        self.t_end = int(t_end)
        self.t = np.asarray(t if t is not None else [], dtype=np.int64)
        self.x = np.asarray(x if x is not None else [], dtype=np.int64)
        self.y = np.asarray(y if y is not None else [], dtype=np.int64)
        self.p = np.asarray(p if p is not None else [], dtype=np.int64)
        self._validate()

    def _validate(self):
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise EventDataError("event columns have mismatched lengths")
        if n == 0:
            return
        if np.any(np.diff(self.t) < 0):
            raise EventDataError("events not sorted by timestamp")
        if self.t[0] < self.t_start or self.t[-1] > self.t_end:
            raise EventDataError("event timestamps outside [t_start, t_end]")
        if np.any((self.x < 0) | (self.x >= self.width)):
            raise EventDataError("event x out of sensor range")
        if np.any((self.y < 0) | (self.y >= self.height)):
            raise EventDataError("event y out of sensor range")
        bad = ~np.isin(self.p, (-1, 1))
        if np.any(bad):
            raise EventDataError("polarity must be -1 or +1")

    @classmethod
    def from_points(cls, points, width, height, t_start, t_end):
        pts = list(points)
        return cls(width, height, t_start, t_end,
                   t=[e.t for e in pts], x=[e.x for e in pts],
                   y=[e.y for e in pts], p=[e.p for e in pts])

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> EventPoint:
        return EventPoint(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and self.t_start == other.t_start and self.t_end == other.t_end
                and np.array_equal(self.t, other.t) and np.array_equal(self.x, other.x)
                and np.array_equal(self.y, other.y) and np.array_equal(self.p, other.p))

    def window_mask(self, lo: int, hi: int) -> np.ndarray:
        """Events with lo < t <= hi (windows are half-open on the left so
        adjacent inter-frame windows partition the stream)."""
        if lo > hi:
            raise EventDataError(f"window inverted: ({lo}, {hi}]")
        return (self.t > lo) & (self.t <= hi)


@dataclass
class VoxelSet:
    """Fixed-capacity spatio-temporal voxel list with zero-padded tail.

    ``coords`` is (n_cap, 3) columns (vx, vy, vz) in grid units, ``feats``
    is (n_cap,) signed polarity sums.  Slots at index >= ``occupied`` are
    all-zero padding.  Coordinates are continuous so attacks can shift them
    off the integer lattice; freshly voxelized sets are integer-valued.
    """
    coords: np.ndarray
    feats: np.ndarray
    occupied: int
    grid_dims: tuple          # (gx, gy, gz)
    cell_px: float            # sensor/patch pixels per spatial cell
    bin_us: float             # microseconds per temporal bin
    k_max: int

    @property
    def n_cap(self) -> int:
        return self.coords.shape[0]

    @classmethod
    def empty(cls, n_cap, grid_dims, cell_px, bin_us, k_max) -> "VoxelSet":
        return cls(coords=np.zeros((n_cap, 3)), feats=np.zeros(n_cap),
                   occupied=0, grid_dims=tuple(grid_dims),
                   cell_px=float(cell_px), bin_us=float(bin_us), k_max=int(k_max))

    def copy(self) -> "VoxelSet":
        return VoxelSet(self.coords.copy(), self.feats.copy(), self.occupied,
                        self.grid_dims, self.cell_px, self.bin_us, self.k_max)

    def active_mask(self) -> np.ndarray:
        return np.arange(self.n_cap) < self.occupied


@dataclass
class EventFrame:
    """Signed polarity accumulation over a time window, shape (H, W)."""
    values: np.ndarray

    def to_display(self, gain: float = 40.0) -> np.ndarray:
        """Map signed sums into [0, 255] around the 127.5 midpoint."""
        return np.clip(127.5 + gain * self.values, 0.0, 255.0)


@dataclass
class RgbFrame:
    """H x W x 3 image with channels in [0, 255]."""
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or v.shape[2] != 3:
            raise EventDataError(f"rgb frame must be (H, W, 3), got {v.shape}")
        if v.min() < 0.0 or v.max() > 255.0:
            raise EventDataError("rgb values outside [0, 255]")
        self.values = v

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def luminance(self) -> np.ndarray:
        r, g, b = self.values[..., 0], self.values[..., 1], self.values[..., 2]
        return 0.299 * r + 0.587 * g + 0.114 * b
