"""Reverse-mode differentiation over numpy arrays.

Operations are recorded eagerly on a tape (:class:`Recording`); a backward
pass from a scalar root yields exact gradients for every leaf.  All math is
64-bit; 32-bit is too coarse for the 1e-4 finite-difference tolerances used
throughout the test suite.

Subgradient conventions (fixed, deterministic):
  * ``abs`` at 0 has gradient 0,
  * binary ``maximum``/``minimum`` route the gradient to the first operand
    on ties,
  * ``clamp`` uses the interior derivative at its boundaries and gradient 0
    strictly outside.
"""

from __future__ import annotations

import numpy as np


class DiffError(Exception):
    """Base class for differentiation-engine errors."""


class DomainError(DiffError):
    """Raised when an operation is evaluated outside its numeric domain."""


class UsageError(DiffError):
    """Raised on misuse of the API (cross-recording ops, non-scalar root)."""


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class _Node:
    __slots__ = ("value", "parents", "vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = value
        self.parents = parents
        self.vjp = vjp  # callable(grad_out) -> tuple of parent grads


class Recording:
    """Append-only trace of operations, topologically ordered by construction."""

    def __init__(self):
        self._nodes: list[_Node] = []
        self._leaf_ids: list[int] = []

    def _append(self, value, parents=(), vjp=None) -> "DiffValue":
        self._nodes.append(_Node(value, parents, vjp))
        return DiffValue(self, len(self._nodes) - 1)

    def leaf(self, value) -> "DiffValue":
        """Register an input whose gradient will be reported by backward()."""
        out = self._append(_as_array(value))
        self._leaf_ids.append(out.idx)
        return out

    def constant(self, value) -> "DiffValue":
        """Wrap a value that participates in math but never receives gradient."""
        return self._append(_as_array(value))

    def __len__(self):
        return len(self._nodes)


def _same_recording(*vals: "DiffValue") -> Recording:
    rec = vals[0].rec
    for v in vals[1:]:
        if v.rec is not rec:
            raise UsageError("operands belong to different recordings")
    return rec


def _coerce(rec: Recording, x) -> "DiffValue":
    if isinstance(x, DiffValue):
        if x.rec is not rec:
            raise UsageError("operands belong to different recordings")
        return x
    return rec.constant(x)


class DiffValue:
    """Handle to one node of a recording."""

    __slots__ = ("rec", "idx")

    def __init__(self, rec: Recording, idx: int):
        self.rec = rec
        self.idx = idx

    @property
    def value(self) -> np.ndarray:
        return self.rec._nodes[self.idx].value

    @property
    def shape(self):
        return self.value.shape

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return add(self, _coerce(self.rec, other))

    def __radd__(self, other):
        return add(_coerce(self.rec, other), self)

    def __sub__(self, other):
        return sub(self, _coerce(self.rec, other))

    def __rsub__(self, other):
        return sub(_coerce(self.rec, other), self)

    def __mul__(self, other):
        return mul(self, _coerce(self.rec, other))

    def __rmul__(self, other):
        return mul(_coerce(self.rec, other), self)

    def __truediv__(self, other):
        return div(self, _coerce(self.rec, other))

    def __rtruediv__(self, other):
        return div(_coerce(self.rec, other), self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __neg__(self):
        return neg(self)

    def __abs__(self):
        return absolute(self)

    def __matmul__(self, other):
        return matmul(self, _coerce(self.rec, other))

    def __getitem__(self, key):
        return getitem(self, key)

    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None):
        return mean(self, axis=axis)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def __repr__(self):
        return f"DiffValue(idx={self.idx}, value={self.value!r})"


# ---------------------------------------------------------------------------
# primitive operations
# ---------------------------------------------------------------------------

def add(a: DiffValue, b: DiffValue) -> DiffValue:
    rec = _same_recording(a, b)
    av, bv = a.value, b.value
    return rec._append(
        av + bv, (a.idx, b.idx),
        lambda g: (_unbroadcast(g, av.shape), _unbroadcast(g, bv.shape)))


def sub(a: DiffValue, b: DiffValue) -> DiffValue:
    rec = _same_recording(a, b)
    av, bv = a.value, b.value
    return rec._append(
        av - bv, (a.idx, b.idx),
        lambda g: (_unbroadcast(g, av.shape), _unbroadcast(g, bv.shape) * -1.0))


def mul(a: DiffValue, b: DiffValue) -> DiffValue:
    rec = _same_recording(a, b)
    av, bv = a.value, b.value
    return rec._append(
        av * bv, (a.idx, b.idx),
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def div(a: DiffValue, b: DiffValue) -> DiffValue:
    rec = _same_recording(a, b)
    av, bv = a.value, b.value
    if np.any(bv == 0.0):
        raise DomainError("division by zero")
    return rec._append(
        av / bv, (a.idx, b.idx),
        lambda g: (_unbroadcast(g / bv, av.shape),
                   _unbroadcast(-g * av / (bv * bv), bv.shape)))


def neg(a: DiffValue) -> DiffValue:
    return a.rec._append(-a.value, (a.idx,), lambda g: (-g,))


def exp(a: DiffValue) -> DiffValue:
    out = np.exp(a.value)
    return a.rec._append(out, (a.idx,), lambda g: (g * out,))


def log(a: DiffValue) -> DiffValue:
    if np.any(a.value <= 0.0):
        raise DomainError("log of non-positive value")
    av = a.value
    return a.rec._append(np.log(av), (a.idx,), lambda g: (g / av,))


def power(a: DiffValue, exponent: float) -> DiffValue:
    """a ** exponent with a constant (non-recorded) exponent."""
    p = float(exponent)
    av = a.value
    if p != int(p) and np.any(av < 0.0):
        raise DomainError("fractional power of negative value")
    if p < 0 and np.any(av == 0.0):
        raise DomainError("negative power of zero")
    out = av ** p
    return a.rec._append(out, (a.idx,), lambda g: (g * p * av ** (p - 1.0),))


def sqrt(a: DiffValue) -> DiffValue:
    return power(a, 0.5)


def absolute(a: DiffValue) -> DiffValue:
    av = a.value
    return a.rec._append(np.abs(av), (a.idx,), lambda g: (g * np.sign(av),))


def tanh(a: DiffValue) -> DiffValue:
    out = np.tanh(a.value)
    return a.rec._append(out, (a.idx,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a: DiffValue) -> DiffValue:
    av = a.value
    out = np.empty_like(av)
    pos = av >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-av[pos]))
    ez = np.exp(av[~pos])
    out[~pos] = ez / (1.0 + ez)
    return a.rec._append(out, (a.idx,), lambda g: (g * out * (1.0 - out),))


def maximum(a: DiffValue, b) -> DiffValue:
    b = _coerce(a.rec, b)
    av, bv = a.value, b.value
    mask = av >= bv  # ties route to the first operand
    return a.rec._append(
        np.where(mask, av, bv), (a.idx, b.idx),
        lambda g: (_unbroadcast(g * mask, av.shape),
                   _unbroadcast(g * ~mask, bv.shape)))


def minimum(a: DiffValue, b) -> DiffValue:
    b = _coerce(a.rec, b)
    av, bv = a.value, b.value
    mask = av <= bv
    return a.rec._append(
        np.where(mask, av, bv), (a.idx, b.idx),
        lambda g: (_unbroadcast(g * mask, av.shape),
                   _unbroadcast(g * ~mask, bv.shape)))


def clamp(a: DiffValue, lo: float, hi: float) -> DiffValue:
    if lo > hi:
        raise UsageError(f"clamp bounds inverted: [{lo}, {hi}]")
    av = a.value
    mask = (av >= lo) & (av <= hi)  # interior derivative at the boundary
    return a.rec._append(np.clip(av, lo, hi), (a.idx,), lambda g: (g * mask,))


def select(mask, a: DiffValue, b: DiffValue) -> DiffValue:
    """Comparison-gated choice: mask is a plain boolean array, not recorded."""
    rec = _same_recording(a, b)
    mask = np.asarray(mask, dtype=bool)
    av, bv = a.value, b.value
    return rec._append(
        np.where(mask, av, bv), (a.idx, b.idx),
        lambda g: (_unbroadcast(g * mask, av.shape),
                   _unbroadcast(g * ~mask, bv.shape)))


def reduce_sum(a: DiffValue, axis=None, keepdims=False) -> DiffValue:
    av = a.value
    out = av.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, av.shape).copy(),)
        gx = g
        if not keepdims:
            gx = np.expand_dims(gx, axis)
        return (np.broadcast_to(gx, av.shape).copy(),)

    return a.rec._append(out, (a.idx,), vjp)


def mean(a: DiffValue, axis=None) -> DiffValue:
    n = a.value.size if axis is None else a.value.shape[axis]
    return reduce_sum(a, axis=axis) / a.rec.constant(float(n))


def reduce_max(a: DiffValue) -> DiffValue:
    """Maximum over all elements; gradient goes to the first max position."""
    av = a.value
    flat_idx = int(np.argmax(av))
    out = av.ravel()[flat_idx]

    def vjp(g):
        grad = np.zeros_like(av)
        grad.ravel()[flat_idx] = g
        return (grad,)

    return a.rec._append(np.asarray(out), (a.idx,), vjp)


def matmul(a: DiffValue, b: DiffValue) -> DiffValue:
    rec = _same_recording(a, b)
    av, bv = a.value, b.value
    if av.ndim != 2 or bv.ndim != 2:
        raise UsageError("matmul expects 2-D operands")
    return rec._append(
        av @ bv, (a.idx, b.idx),
        lambda g: (g @ bv.T, av.T @ g))


def reshape(a: DiffValue, shape) -> DiffValue:
    av = a.value
    return a.rec._append(av.reshape(shape), (a.idx,),
                         lambda g: (g.reshape(av.shape),))


def transpose(a: DiffValue, axes=None) -> DiffValue:
    av = a.value
    if axes is None:
        axes = tuple(reversed(range(av.ndim)))
    inv = np.argsort(axes)
    return a.rec._append(np.transpose(av, axes), (a.idx,),
                         lambda g: (np.transpose(g, inv),))


def getitem(a: DiffValue, key) -> DiffValue:
    av = a.value

    def vjp(g):
        grad = np.zeros_like(av)
        np.add.at(grad, key, g)
        return (grad,)

    return a.rec._append(np.asarray(av[key]), (a.idx,), vjp)


def stack(values: list, axis: int = 0) -> DiffValue:
    rec = _same_recording(*values)
    arrs = [v.value for v in values]
    out = np.stack(arrs, axis=axis)

    def vjp(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(values)))

    return rec._append(out, tuple(v.idx for v in values), vjp)


def concat(values: list, axis: int = 0) -> DiffValue:
    rec = _same_recording(*values)
    arrs = [v.value for v in values]
    sizes = [a.shape[axis] for a in arrs]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return rec._append(np.concatenate(arrs, axis=axis),
                       tuple(v.idx for v in values), vjp)


def stop_gradient(a: DiffValue) -> DiffValue:
    return a.rec.constant(a.value.copy())


# ---------------------------------------------------------------------------
# structured operations for the convolutional tracker
# ---------------------------------------------------------------------------

def _norm_pad(pad):
    if isinstance(pad, int):
        return ((pad, pad), (pad, pad))
    (pt, pb), (pl, pr) = pad
    return ((int(pt), int(pb)), (int(pl), int(pr)))


def extract_patches(x: DiffValue, ksize, stride: int, pad) -> DiffValue:
    """im2col: (C, H, W) -> (C*kh*kw, oh*ow) column matrix.

    Zero padding; the adjoint scatter-adds column gradients back into the
    input (col2im), one vectorized add per kernel offset.
    """
    kh, kw = (ksize, ksize) if isinstance(ksize, int) else ksize
    (pt, pb), (pl, pr) = _norm_pad(pad)
    xv = x.value
    if xv.ndim != 3:
        raise UsageError("extract_patches expects a (C, H, W) input")
    c, h, w = xv.shape
    hp, wp = h + pt + pb, w + pl + pr
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    xpad = np.zeros((c, hp, wp))
    xpad[:, pt:pt + h, pl:pl + w] = xv
    s0, s1, s2 = xpad.strides
    windows = np.lib.stride_tricks.as_strided(
        xpad, shape=(c, kh, kw, oh, ow),
        strides=(s0, s1, s2, s1 * stride, s2 * stride))
    cols = windows.reshape(c * kh * kw, oh * ow).copy()

    def vjp(g):
        gw = g.reshape(c, kh, kw, oh, ow)
        gpad = np.zeros((c, hp, wp))
        for u in range(kh):
            for v in range(kw):
                gpad[:, u:u + stride * oh:stride, v:v + stride * ow:stride] += gw[:, u, v]
        return (gpad[:, pt:pt + h, pl:pl + w],)

    return x.rec._append(cols, (x.idx,), vjp)


def trilinear_splat(coords: DiffValue, feats: DiffValue, active: np.ndarray,
                    grid_shape: tuple) -> DiffValue:
    """Scatter per-voxel features into a (gz, gy, gx) grid.

    ``coords`` is (N, 3) columns (x, y, z); each active voxel deposits its
    feature on the 8 surrounding grid nodes with trilinear weights that sum
    to exactly 1.  Coordinates are clipped into the grid; the base corner is
    capped at size-2 so the boundary keeps its interior (one-sided)
    derivative.  Inactive slots contribute nothing and receive zero gradient.

    Gradients w.r.t. coordinates come from the kernel's spatial derivative;
    gradients w.r.t. features are the splat weights themselves.
    """
    rec = _same_recording(coords, feats)
    gz, gy, gx = grid_shape
    dims = np.array([gx, gy, gz], dtype=np.float64)
    cv = coords.value
    fv = feats.value
    if cv.ndim != 2 or cv.shape[1] != 3:
        raise UsageError("coords must be (N, 3)")
    active = np.asarray(active, dtype=bool)

    v = np.clip(cv[active], 0.0, dims - 1.0)           # (n, 3) in (x, y, z)
    inside = (cv[active] >= 0.0) & (cv[active] <= dims - 1.0)
    f_act = fv[active]
    base = np.minimum(np.floor(v), np.maximum(dims - 2.0, 0.0)).astype(np.int64)
    frac = v - base                                     # in [0, 1]
    one = 1.0 - frac

    grid = np.zeros((gz, gy, gx))
    corner_cache = []
    for dz in (0, 1):
        for dy in (0, 1):
            for dx in (0, 1):
                ix = np.minimum(base[:, 0] + dx, gx - 1)
                iy = np.minimum(base[:, 1] + dy, gy - 1)
                iz = np.minimum(base[:, 2] + dz, gz - 1)
                wx = frac[:, 0] if dx else one[:, 0]
                wy = frac[:, 1] if dy else one[:, 1]
                wz = frac[:, 2] if dz else one[:, 2]
                if gx == 1:
                    wx = np.ones_like(wx) if dx == 0 else np.zeros_like(wx)
                if gy == 1:
                    wy = np.ones_like(wy) if dy == 0 else np.zeros_like(wy)
                if gz == 1:
                    wz = np.ones_like(wz) if dz == 0 else np.zeros_like(wz)
                w = wx * wy * wz
                np.add.at(grid, (iz, iy, ix), w * f_act)
                corner_cache.append((ix, iy, iz, wx, wy, wz))

    def vjp(g):
        d_feats = np.zeros_like(fv)
        d_coords = np.zeros_like(cv)
        df_act = np.zeros_like(f_act)
        dc_act = np.zeros((f_act.size, 3))
        k = 0
        for dz in (0, 1):
            for dy in (0, 1):
                for dx in (0, 1):
                    ix, iy, iz, wx, wy, wz = corner_cache[k]
                    k += 1
                    gg = g[iz, iy, ix]
                    df_act += wx * wy * wz * gg
                    sx = 1.0 if dx else -1.0
                    sy = 1.0 if dy else -1.0
                    sz = 1.0 if dz else -1.0
                    if gx > 1:
                        dc_act[:, 0] += sx * wy * wz * f_act * gg
                    if gy > 1:
                        dc_act[:, 1] += sy * wx * wz * f_act * gg
                    if gz > 1:
                        dc_act[:, 2] += sz * wx * wy * f_act * gg
        dc_act *= inside  # zero gradient strictly outside the grid
        d_feats[active] = df_act
        d_coords[active] = dc_act
        return (d_coords, d_feats)

    return rec._append(grid, (coords.idx, feats.idx), vjp)


# ---------------------------------------------------------------------------
# backward pass
# ---------------------------------------------------------------------------

class GradientTable:
    """Leaf gradients from one backward pass; missing leaves read as zero."""

    def __init__(self, rec: Recording, grads: dict):
        self._rec = rec
        self._grads = grads

    def __getitem__(self, leaf: DiffValue) -> np.ndarray:
        if leaf.rec is not self._rec:
            raise UsageError("leaf belongs to a different recording")
        g = self._grads.get(leaf.idx)
        if g is None:
            return np.zeros_like(leaf.value)
        return g


def backward(root: DiffValue) -> GradientTable:
    """Reverse-mode sweep from a scalar root; returns leaf gradients."""
    rec = root.rec
    rv = root.value
    if rv.size != 1:
        raise UsageError(f"backward root must be scalar, got shape {rv.shape}")
    grads: dict[int, np.ndarray] = {root.idx: np.ones_like(rv)}
    nodes = rec._nodes
    for idx in range(root.idx, -1, -1):
        g = grads.pop(idx, None)
        if g is None:
            continue
        node = nodes[idx]
        if node.vjp is None:
            grads[idx] = g  # keep leaf/constant grads for the table
            continue
        parent_grads = node.vjp(g)
        for pidx, pg in zip(node.parents, parent_grads):
            acc = grads.get(pidx)
            grads[pidx] = pg if acc is None else acc + pg
    table = {i: grads[i] for i in rec._leaf_ids if i in grads and grads[i] is not None}
    return GradientTable(rec, table)
