"""Event-frame accumulation."""

from __future__ import annotations

import numpy as np

from .types import EventFrame, EventStream


def accumulate_event_frame(events: EventStream, window: tuple) -> EventFrame:
    """Sum polarities per pixel over lo < t <= hi."""
    lo, hi = int(window[0]), int(window[1])
    values = np.zeros((events.height, events.width))
    mask = events.window_mask(lo, hi)
    if mask.any():
        np.add.at(values, (events.y[mask], events.x[mask]),
                  events.p[mask].astype(np.float64))
    return EventFrame(values)
