"""Central finite-difference verification of recorded gradients."""

from __future__ import annotations

import numpy as np

from .engine import Recording, backward


def finite_diff_check(f, point, h: float = 1e-5, coords=None) -> float:
    """Compare analytic gradients of ``f`` against central differences.

    ``f`` takes one leaf DiffValue and returns a scalar DiffValue.  Returns
    the max over checked coordinates of
    ``|analytic - central| / max(1, |analytic|)``.  ``coords`` restricts the
    check to a subset of flat indices (all coordinates by default), which
    keeps checks over large pixel grids affordable.
    """
    point = np.asarray(point, dtype=np.float64)
    rec = Recording()
    x = rec.leaf(point)
    analytic = backward(f(x))[x].ravel()

    def value_at(p):
        r = Recording()
        return float(f(r.leaf(p)).value)

    flat = point.ravel()
    if coords is None:
        coords = range(flat.size)
    worst = 0.0
    for i in coords:
        bump = flat.copy()
        bump[i] += h
        up = value_at(bump.reshape(point.shape))
        bump[i] -= 2.0 * h
        down = value_at(bump.reshape(point.shape))
        numeric = (up - down) / (2.0 * h)
        err = abs(analytic[i] - numeric) / max(1.0, abs(analytic[i]))
        worst = max(worst, err)
    return worst
