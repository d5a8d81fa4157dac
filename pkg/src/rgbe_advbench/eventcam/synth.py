"""Synthetic RGB + event sequence generator.

Renders rigid shapes moving over a static textured background and derives
events from per-pixel log-luminance differences between consecutive rendered
frames: a pixel fires one event per frame transition when the absolute
change exceeds the contrast threshold, with polarity given by the sign of
the change.  Static regions produce no events.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..boxes import BBox
from .types import EventStream, RgbFrame


class SceneError(ValueError):
    """Invalid scene configuration."""


@dataclass(frozen=True)
class ObjectSpec:
    shape: str                  # "rect" or "disc"
    size: tuple                 # (w, h) in pixels
    color: tuple                # (r, g, b) in [0, 255]
    start: tuple                # center (cx, cy) at frame 0
    velocity: tuple             # (vx, vy) pixels per frame


@dataclass(frozen=True)
class SceneConfig:
    width: int = 240
    height: int = 180
    n_frames: int = 40
    fps: float = 30.0
    contrast: float = 0.35      # log-luminance trigger threshold
    background: tuple = (84.0, 88.0, 96.0)
    texture_amp: float = 5.0    # static background texture amplitude
    objects: tuple = ()         # explicit objects; empty -> randomized
    n_random_objects: int = 2   # target + distractors when randomizing
    target_index: int = 0


def _validate(scene: SceneConfig, objects):
    if scene.n_frames < 2:
        raise SceneError("scene duration must cover at least two frames")
    if scene.fps <= 0:
        raise SceneError("frame rate must be positive")
    if scene.contrast <= 0:
        raise SceneError("contrast threshold must be positive")
    for obj in objects:
        w, h = obj.size
        if w <= 0 or h <= 0:
            raise SceneError("object size must be positive")
        if w >= scene.width or h >= scene.height:
            raise SceneError("object larger than canvas")
    if not 0 <= scene.target_index < len(objects):
        raise SceneError("target index out of range")


def _random_objects(scene: SceneConfig, rng: np.random.Generator):
    """Fill in objects when the scene does not pin them down.

    Object luminance is kept well away from the background's so moving
    edges reliably clear the contrast threshold; distractors take the
    opposite brightness class from the target so appearance matching stays
    well-posed.
    """
    objects = []
    w, h = scene.width, scene.height
    target_bright = rng.random() < 0.5
    for i in range(scene.n_random_objects):
        shape = "rect" if rng.random() < 0.6 else "disc"
        ow = float(rng.uniform(18, 30))
        oh = float(min(rng.uniform(0.8, 1.25) * ow, 30.0))
        bright = target_bright if i == 0 else not target_bright
        color = rng.uniform(165, 235, 3) if bright else rng.uniform(8, 48, 3)
        margin = max(ow, oh)
        if i == 0:
            cx = rng.uniform(0.3 * w, 0.7 * w)
            cy = rng.uniform(0.3 * h, 0.7 * h)
        else:
            while True:
                cx = rng.uniform(margin, w - margin)
                cy = rng.uniform(margin, h - margin)
                if np.hypot(cx - objects[0].start[0], cy - objects[0].start[1]) > 70:
                    break
        speed = rng.uniform(1.5, 3.5)
        angle = rng.uniform(0, 2 * np.pi)
        objects.append(ObjectSpec(
            shape=shape, size=(ow, oh), color=tuple(color),
            start=(cx, cy), velocity=(speed * np.cos(angle), speed * np.sin(angle))))
    return objects


def _bounce(p0: float, v: float, k: int, lo: float, hi: float) -> float:
    """Position after k frames with reflection off [lo, hi]."""
    if hi <= lo:
        return float(np.clip(p0, lo, hi))
    span = hi - lo
    q = (p0 + v * k - lo) % (2.0 * span)
    return lo + (q if q <= span else 2.0 * span - q)


def _coverage(obj: ObjectSpec, cx: float, cy: float, width: int, height: int):
    """Per-pixel alpha of the object footprint, analytic anti-aliasing."""
    ow, oh = obj.size
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    if obj.shape == "rect":
        covx = np.clip(np.minimum(xs + 1.0, cx + ow / 2) - np.maximum(xs, cx - ow / 2), 0.0, 1.0)
        covy = np.clip(np.minimum(ys + 1.0, cy + oh / 2) - np.maximum(ys, cy - oh / 2), 0.0, 1.0)
        return np.outer(covy, covx)
    if obj.shape == "disc":
        r = 0.5 * min(ow, oh)
        dist = np.hypot(xs[None, :] + 0.5 - cx, ys[:, None] + 0.5 - cy)
        return np.clip(0.5 + (r - dist), 0.0, 1.0)
    raise SceneError(f"unknown shape {obj.shape!r}")


def _render(scene, objects, background, frame_idx):
    canvas = background.copy()
    for obj in objects:
        cx = _bounce(obj.start[0], obj.velocity[0], frame_idx,
                     obj.size[0] / 2, scene.width - obj.size[0] / 2)
        cy = _bounce(obj.start[1], obj.velocity[1], frame_idx,
                     obj.size[1] / 2, scene.height - obj.size[1] / 2)
        alpha = _coverage(obj, cx, cy, scene.width, scene.height)
        color = np.asarray(obj.color, dtype=np.float64)
        canvas = canvas * (1.0 - alpha[..., None]) + color * alpha[..., None]
    return np.clip(np.round(canvas), 0.0, 255.0)


def _target_box(scene, objects, frame_idx) -> BBox:
    obj = objects[scene.target_index]
    cx = _bounce(obj.start[0], obj.velocity[0], frame_idx,
                 obj.size[0] / 2, scene.width - obj.size[0] / 2)
    cy = _bounce(obj.start[1], obj.velocity[1], frame_idx,
                 obj.size[1] / 2, scene.height - obj.size[1] / 2)
    if obj.shape == "disc":
        d = min(obj.size)
        return BBox.from_center(cx, cy, d, d)
    return BBox.from_center(cx, cy, obj.size[0], obj.size[1])


def frame_time_us(frame_idx: int, fps: float) -> int:
    # exact uniform spacing lets loaders recover frame times from the
    # stream's (t_start, t_end) alone
    return frame_idx * int(round(1e6 / fps))


def synthesize_sequence(scene: SceneConfig, seed: int):
    """Render a sequence and derive its event stream and ground truth.

    Returns (frames, events, gt_boxes).  Bit-identical for identical
    (scene, seed).
    """
    rng = np.random.default_rng(seed)
    objects = list(scene.objects) if scene.objects else _random_objects(scene, rng)
    _validate(scene, objects)

    background = np.asarray(scene.background, dtype=np.float64)[None, None, :]
    background = np.broadcast_to(background, (scene.height, scene.width, 3)).copy()
    if scene.texture_amp > 0:
        background += rng.uniform(-scene.texture_amp, scene.texture_amp,
                                  size=(scene.height, scene.width, 1))
    background = np.clip(background, 0.0, 255.0)

    frames, gt_boxes = [], []
    ev_t, ev_x, ev_y, ev_p = [], [], [], []
    prev_log = None
    for k in range(scene.n_frames):
        pixels = _render(scene, objects, background, k)
        frames.append(RgbFrame(pixels))
        gt_boxes.append(_target_box(scene, objects, k))
        log_luma = np.log1p(RgbFrame(pixels).luminance())
        if prev_log is not None:
            diff = log_luma - prev_log
            fired = np.abs(diff) > scene.contrast
            ys, xs = np.nonzero(fired)       # scanline order: row-major
            if len(xs):
                tk = frame_time_us(k, scene.fps)
                ev_t.append(np.full(len(xs), tk, dtype=np.int64))
                ev_x.append(xs.astype(np.int64))
                ev_y.append(ys.astype(np.int64))
                ev_p.append(np.sign(diff[ys, xs]).astype(np.int64))
        prev_log = log_luma

    if ev_t:
        t = np.concatenate(ev_t)
        x = np.concatenate(ev_x)
        y = np.concatenate(ev_y)
        p = np.concatenate(ev_p)
    else:
        t = x = y = p = None
    events = EventStream(scene.width, scene.height,
                         t_start=0, t_end=frame_time_us(scene.n_frames - 1, scene.fps),
                         t=t, x=x, y=y, p=p)
    return frames, events, gt_boxes
