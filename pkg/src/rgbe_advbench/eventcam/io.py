"""On-disk formats: event text files, P6 pixmaps, sequence directories.

Event file: UTF-8 text, header ``# evt v1 W H t_start t_end`` then one
``t x y p`` line per event.  Sequence directory layout::

    frames/000000.ppm ...   P6 binary pixmaps
    events.evt              event file
    groundtruth.txt         one "x,y,w,h" line per frame
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..boxes import BBox
from .types import EventStream, RgbFrame


class ParseError(ValueError):
    """Malformed file content; message carries the offending line number."""


_EVT_MAGIC = "# evt v1"


def save_events(stream: EventStream, path):
    lines = [f"{_EVT_MAGIC} {stream.width} {stream.height} "
             f"{stream.t_start} {stream.t_end}"]
    for i in range(len(stream)):
        lines.append(f"{stream.t[i]} {stream.x[i]} {stream.y[i]} {stream.p[i]}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_events(path) -> EventStream:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith(_EVT_MAGIC):
        raise ParseError(f"{path}: line 1: missing '{_EVT_MAGIC}' header")
    head = lines[0].split()
    if len(head) != 7:
        raise ParseError(f"{path}: line 1: header needs W H t_start t_end")
    try:
        width, height, t_start, t_end = (int(v) for v in head[3:])
    except ValueError as exc:
        raise ParseError(f"{path}: line 1: non-integer header field") from exc

    t, x, y, p = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"{path}: line {lineno}: expected 't x y p'")
        try:
            et, ex, ey, ep = (int(v) for v in parts)
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: non-integer field") from exc
        if ep not in (-1, 1):
            raise ParseError(f"{path}: line {lineno}: polarity must be -1 or +1")
        if not (0 <= ex < width and 0 <= ey < height):
            raise ParseError(f"{path}: line {lineno}: coordinate out of range")
        t.append(et)
        x.append(ex)
        y.append(ey)
        p.append(ep)
    try:
        return EventStream(width, height, t_start, t_end, t=t, x=x, y=y, p=p)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def save_ppm(frame: RgbFrame, path):
    pixels = np.round(frame.values).astype(np.uint8)
    h, w = pixels.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def load_ppm(path) -> RgbFrame:
    with open(path, "rb") as fh:
        data = fh.read()
    # header: magic, width, height, maxval, single whitespace, then raster
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise ParseError(f"{path}: not a P6 pixmap")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ParseError(f"{path}: unsupported maxval {maxval}")
    pos += 1
    raster = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return RgbFrame(raster.reshape(h, w, 3).astype(np.float64))


def save_groundtruth(boxes, path):
    with open(path, "w", encoding="utf-8") as fh:
        for b in boxes:
            fh.write(f"{b.x:.4f},{b.y:.4f},{b.w:.4f},{b.h:.4f}\n")


def load_groundtruth(path):
    boxes = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != 4:
                raise ParseError(f"{path}: line {lineno}: expected 'x,y,w,h'")
            try:
                x, y, w, h = (float(v) for v in parts)
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: non-numeric field") from exc
            boxes.append(BBox(x, y, w, h))
    return boxes


@dataclass
class Sequence:
    """One loaded sequence: frames, events, ground truth, uniform timing."""
    name: str
    frames: list
    events: EventStream
    gt_boxes: list

    def __post_init__(self):
        n = len(self.frames)
        if n != len(self.gt_boxes):
            raise ParseError(f"{self.name}: {n} frames vs {len(self.gt_boxes)} boxes")
        span = self.events.t_end - self.events.t_start
        self._dt = span // (n - 1) if n > 1 else 0

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def frame_time(self, k: int) -> int:
        return self.events.t_start + k * self._dt

    def inter_frame_window(self, k: int) -> tuple:
        """Event window feeding frame k: (t_{k-1}, t_k], except frame 0
        which borrows the first transition window."""
        if k <= 0:
            return (self.frame_time(0), self.frame_time(min(1, self.n_frames - 1)))
        return (self.frame_time(k - 1), self.frame_time(k))


def save_sequence(dirpath, frames, events, gt_boxes):
    frames_dir = os.path.join(dirpath, "frames")
    os.makedirs(frames_dir, exist_ok=True)
    for i, frame in enumerate(frames):
        save_ppm(frame, os.path.join(frames_dir, f"{i:06d}.ppm"))
    save_events(events, os.path.join(dirpath, "events.evt"))
    save_groundtruth(gt_boxes, os.path.join(dirpath, "groundtruth.txt"))


def load_sequence(dirpath) -> Sequence:
    frames_dir = os.path.join(dirpath, "frames")
    if not os.path.isdir(frames_dir):
        raise ParseError(f"{dirpath}: missing frames/ directory")
    names = sorted(n for n in os.listdir(frames_dir) if n.endswith(".ppm"))
    frames = [load_ppm(os.path.join(frames_dir, n)) for n in names]
    events = load_events(os.path.join(dirpath, "events.evt"))
    gt_boxes = load_groundtruth(os.path.join(dirpath, "groundtruth.txt"))
    return Sequence(name=os.path.basename(os.path.normpath(dirpath)),
                    frames=frames, events=events, gt_boxes=gt_boxes)
