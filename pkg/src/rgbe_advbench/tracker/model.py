"""Differentiable surrogate tracker.

Per modality a shared 3-layer strided conv encoder embeds template and
search patches; modalities are fused by learned scalar weights; an 8x8
template kernel cross-correlates over the search features to produce a
16x16 score map.  The box center comes from a soft-argmax over the score
logits, the size from a small head on score-pooled features.  Everything is
differentiable w.r.t. input pixels, voxel coordinates and voxel features.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from ..boxes import BBox
from ..diffmath import (
    DiffValue,
    Recording,
    clamp,
    exp,
    extract_patches,
    matmul,
    maximum,
    minimum,
    reduce_max,
    reshape,
    sigmoid,
    stack,
    stop_gradient,
    tanh,
    transpose,
    trilinear_splat,
)
from ..eventcam.types import VoxelSet

MODALITIES = ("rgb", "voxel", "frame", "rgb+voxel", "rgb+frame")

SCORE_CLAMP = 1e-6


class ConfigurationError(ValueError):
    """Model/input configuration mismatch."""


@dataclass(frozen=True)
class TrackerConfig:
    modality: str = "rgb"
    template_size: int = 64
    search_size: int = 128
    score_size: int = 16
    channels: tuple = (8, 12, 16)
    template_scale: float = 2.0
    search_scale: float = 4.0
    cell_px: int = 4          # voxel spatial cell in patch pixels
    n_bins: int = 8           # voxel temporal bins == splat input channels
    n_cap: int = 1024
    k_max: int = 8
    heatmap_sigma: float = 1.0
    softargmax_temp: float = 1.0
    min_box: float = 4.0
    max_box: float = 128.0

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ConfigurationError(f"unknown modality {self.modality!r}")

    @property
    def uses_rgb(self) -> bool:
        return "rgb" in self.modality

    @property
    def uses_voxel(self) -> bool:
        return "voxel" in self.modality

    @property
    def uses_frame(self) -> bool:
        return "frame" in self.modality

    @property
    def stride(self) -> float:
        return self.search_size / self.score_size

    @property
    def kernel_cells(self) -> int:
        # template feature grid side after encoding
        return self.template_size // 8


@dataclass
class PatchPair:
    """One template/search input pair; present fields match the modality."""
    modality: str
    z_rgb: np.ndarray = None
    x_rgb: np.ndarray = None
    z_vox: VoxelSet = None
    x_vox: VoxelSet = None
    z_frame: np.ndarray = None
    x_frame: np.ndarray = None

    def validate(self, config: TrackerConfig):
        if self.modality != config.modality:
            raise ConfigurationError(
                f"pair modality {self.modality!r} does not match model "
                f"{config.modality!r}")
        t, s = config.template_size, config.search_size
        if config.uses_rgb:
            if self.z_rgb is None or self.x_rgb is None:
                raise ConfigurationError("rgb patches missing")
            if self.z_rgb.shape != (t, t, 3) or self.x_rgb.shape != (s, s, 3):
                raise ConfigurationError("rgb patch sizes do not match config")
        if config.uses_frame:
            if self.z_frame is None or self.x_frame is None:
                raise ConfigurationError("event-frame patches missing")
            if self.z_frame.shape != (t, t) or self.x_frame.shape != (s, s):
                raise ConfigurationError("event-frame patch sizes do not match config")
        if config.uses_voxel:
            if self.z_vox is None or self.x_vox is None:
                raise ConfigurationError("voxel patches missing")

    def copy(self) -> "PatchPair":
        cp = lambda a: None if a is None else a.copy()
        return PatchPair(self.modality, cp(self.z_rgb), cp(self.x_rgb),
                         cp(self.z_vox), cp(self.x_vox),
                         cp(self.z_frame), cp(self.x_frame))


@dataclass
class TrackerOutput:
    """Numpy view of one prediction."""
    score_map: np.ndarray
    bbox: BBox


@dataclass
class ForwardResult:
    """Recorded view of one prediction, differentiable."""
    score_map: DiffValue
    box: DiffValue
    logits: DiffValue

    def to_output(self) -> TrackerOutput:
        b = self.box.value
        return TrackerOutput(self.score_map.value.copy(),
                             BBox(float(b[0]), float(b[1]), float(b[2]), float(b[3])))


@dataclass
class TrackerParams:
    config: TrackerConfig
    weights: dict
    step_count: int = 0
    seed: int = 0

    def copy(self) -> "TrackerParams":
        return TrackerParams(self.config,
                             {k: v.copy() for k, v in self.weights.items()},
                             self.step_count, self.seed)


def _encoder_shapes(prefix: str, in_ch: int, channels: tuple):
    shapes = {}
    prev = in_ch
    for i, ch in enumerate(channels, start=1):
        shapes[f"{prefix}.conv{i}.w"] = (ch, prev, 3, 3)
        shapes[f"{prefix}.conv{i}.b"] = (ch,)
        prev = ch
    return shapes


def weight_shapes(config: TrackerConfig) -> dict:
    shapes = {}
    if config.uses_rgb:
        shapes.update(_encoder_shapes("rgb", 3, config.channels))
    if config.uses_frame:
        shapes.update(_encoder_shapes("frm", 1, config.channels))
    if config.uses_voxel:
        shapes.update(_encoder_shapes("vox", config.n_bins, config.channels))
    if "+" in config.modality:
        shapes["fuse.rgb"] = ()
        shapes["fuse.event"] = ()
    shapes["head.gain"] = ()
    shapes["head.bias"] = ()
    shapes["size.w"] = (config.channels[-1], 2)
    shapes["size.b"] = (2,)
    return shapes


def init_params(config: TrackerConfig, seed: int = 0) -> TrackerParams:
    rng = np.random.default_rng(seed)
    weights = {}
    for name, shape in weight_shapes(config).items():
        if name.endswith(".b") or name == "size.b":
            weights[name] = np.zeros(shape)
        elif name.startswith("fuse."):
            weights[name] = np.asarray(0.5)
        elif name == "head.gain":
            weights[name] = np.asarray(1.0)
        elif name == "head.bias":
            weights[name] = np.asarray(-2.0)
        elif name == "size.w":
            weights[name] = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[1:]))
            weights[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
    # start the size head at a plausible box side: inverse-sigmoid of
    # (32 - min) / (max - min)
    frac = (32.0 - config.min_box) / (config.max_box - config.min_box)
    weights["size.b"] = np.full(2, np.log(frac / (1.0 - frac)))
    return TrackerParams(config=config, weights=weights, seed=seed)


def weight_nodes(rec: Recording, params: TrackerParams,
                 trainable: bool = False) -> dict:
    make = rec.leaf if trainable else rec.constant
    return {name: make(value) for name, value in params.weights.items()}


# ---------------------------------------------------------------------------
# forward pieces
# ---------------------------------------------------------------------------

def conv2d(x: DiffValue, w: DiffValue, b: DiffValue, stride: int, pad) -> DiffValue:
    k, c, kh, kw = w.value.shape
    cols = extract_patches(x, (kh, kw), stride, pad)
    oh_ow = cols.value.shape[1]
    _, h, w_in = x.value.shape
    if isinstance(pad, int):
        ph = pw = 2 * pad
    else:
        ph = sum(pad[0])
        pw = sum(pad[1])
    oh = (h + ph - kh) // stride + 1
    ow = (w_in + pw - kw) // stride + 1
    assert oh * ow == oh_ow
    out = matmul(reshape(w, (k, c * kh * kw)), cols)
    return reshape(out, (k, oh, ow)) + reshape(b, (k, 1, 1))


def _encode(wn: dict, prefix: str, x: DiffValue, strides) -> DiffValue:
    t = x
    for i, stride in enumerate(strides, start=1):
        t = tanh(conv2d(t, wn[f"{prefix}.conv{i}.w"], wn[f"{prefix}.conv{i}.b"],
                        stride, 1))
    return t


def embed_rgb(wn: dict, patch: DiffValue) -> DiffValue:
    """(H, W, 3) pixel patch in [0, 255] -> (C, H/8, W/8) features."""
    x = transpose(patch, (2, 0, 1)) * (1.0 / 127.5) - 1.0
    return _encode(wn, "rgb", x, (2, 2, 2))


def embed_frame(wn: dict, patch: DiffValue) -> DiffValue:
    """(H, W) display-normalized event frame -> (C, H/8, W/8) features."""
    h, w = patch.value.shape
    x = reshape(patch, (1, h, w)) * (1.0 / 127.5) - 1.0
    return _encode(wn, "frm", x, (2, 2, 2))


def embed_voxels(wn: dict, coords: DiffValue, feats: DiffValue,
                 active: np.ndarray, grid_dims: tuple,
                 config: TrackerConfig) -> DiffValue:
    """Splat voxels onto the (bins, gy, gx) grid with a trilinear kernel,
    fold the temporal axis into channels, then encode like an image.
    Padding slots contribute nothing and receive zero gradient."""
    gx, gy, gz = grid_dims
    if gz != config.n_bins:
        raise ConfigurationError(
            f"voxel set has {gz} temporal bins, model expects {config.n_bins}")
    grid = trilinear_splat(coords, feats, active, (gz, gy, gx))
    grid = grid * (1.0 / config.k_max)
    return _encode(wn, "vox", grid, (2, 1, 1))


def _correlate(search_feat: DiffValue, template_feat: DiffValue) -> DiffValue:
    c, kh, kw = template_feat.value.shape
    _, sh, sw = search_feat.value.shape
    pt = (kh - 1) // 2
    pl = (kw - 1) // 2
    pad = ((pt, kh - 1 - pt), (pl, kw - 1 - pl))
    cols = extract_patches(search_feat, (kh, kw), 1, pad)
    kern = reshape(template_feat, (1, c * kh * kw))
    out = matmul(kern, cols)
    norm = 1.0 / np.sqrt(c * kh * kw)
    return reshape(out, (sh, sw)) * norm


def forward(rec: Recording, params: TrackerParams, inputs: dict,
            wn: dict = None) -> ForwardResult:
    """Run the tracker on prepared input nodes (see :func:`pair_nodes`).

    ``wn`` overrides the weight nodes (training passes leaves); by default
    weights are constants of ``rec``.
    """
    config = params.config
    if wn is None:
        wn = weight_nodes(rec, params, trainable=False)

    feats_z, feats_x, fuse_names = [], [], []
    if config.uses_rgb:
        feats_z.append(embed_rgb(wn, inputs["z_rgb"]))
        feats_x.append(embed_rgb(wn, inputs["x_rgb"]))
        fuse_names.append("fuse.rgb")
    if config.uses_voxel:
        feats_z.append(embed_voxels(wn, inputs["z_vox_coords"], inputs["z_vox_feats"],
                                    inputs["z_vox_active"], inputs["z_vox_dims"], config))
        feats_x.append(embed_voxels(wn, inputs["x_vox_coords"], inputs["x_vox_feats"],
                                    inputs["x_vox_active"], inputs["x_vox_dims"], config))
        fuse_names.append("fuse.event")
    if config.uses_frame:
        feats_z.append(embed_frame(wn, inputs["z_frame"]))
        feats_x.append(embed_frame(wn, inputs["x_frame"]))
        fuse_names.append("fuse.event")

    if len(feats_z) == 1:
        fz, fx = feats_z[0], feats_x[0]
    else:
        fz = wn[fuse_names[0]] * feats_z[0] + wn[fuse_names[1]] * feats_z[1]
        fx = wn[fuse_names[0]] * feats_x[0] + wn[fuse_names[1]] * feats_x[1]

    corr = _correlate(fx, fz)
    logits = wn["head.gain"] * corr + wn["head.bias"]

    s = config.score_size
    score_map = clamp(sigmoid(logits), SCORE_CLAMP, 1.0 - SCORE_CLAMP)

    flat = reshape(logits, (s * s,)) * (1.0 / config.softargmax_temp)
    shift = stop_gradient(reduce_max(flat))
    e = exp(flat - shift)
    probs = e / e.sum()

    stride = config.stride
    cell_centers = (np.arange(s) + 0.5) * stride
    pm = reshape(probs, (s, s))
    rec_ref = pm.rec
    cx = (pm * rec_ref.constant(cell_centers[None, :])).sum()
    cy = (pm * rec_ref.constant(cell_centers[:, None])).sum()

    c = config.channels[-1]
    pooled = matmul(reshape(fx, (c, s * s)), reshape(probs, (s * s, 1)))
    raw_size = sigmoid(matmul(reshape(pooled, (1, c)), wn["size.w"])
                       + reshape(wn["size.b"], (1, 2)))
    span = config.max_box - config.min_box
    bw = clamp(config.min_box + span * raw_size[0, 0], config.min_box, config.max_box)
    bh = clamp(config.min_box + span * raw_size[0, 1], config.min_box, config.max_box)

    patch = float(config.search_size)
    zero = rec_ref.constant(0.0)
    bx = maximum(minimum(cx - 0.5 * bw, patch - bw), zero)
    by = maximum(minimum(cy - 0.5 * bh, patch - bh), zero)
    box = stack([bx, by, bw, bh])
    return ForwardResult(score_map=score_map, box=box, logits=logits)


def pair_nodes(rec: Recording, pair: PatchPair, config: TrackerConfig,
               leaves: tuple = ()) -> dict:
    """Wrap a PatchPair into recording nodes.

    Keys named in ``leaves`` become gradient-tracked inputs (attack
    surfaces); everything else is constant.  Voxel activity masks and grid
    dims ride along as plain arrays.
    """
    pair.validate(config)

    def wrap(name, value):
        return rec.leaf(value) if name in leaves else rec.constant(value)

    nodes = {}
    if config.uses_rgb:
        nodes["z_rgb"] = wrap("z_rgb", pair.z_rgb)
        nodes["x_rgb"] = wrap("x_rgb", pair.x_rgb)
    if config.uses_frame:
        nodes["z_frame"] = wrap("z_frame", pair.z_frame)
        nodes["x_frame"] = wrap("x_frame", pair.x_frame)
    if config.uses_voxel:
        for tag, vs in (("z", pair.z_vox), ("x", pair.x_vox)):
            nodes[f"{tag}_vox_coords"] = wrap(f"{tag}_vox_coords", vs.coords)
            nodes[f"{tag}_vox_feats"] = wrap(f"{tag}_vox_feats", vs.feats)
            nodes[f"{tag}_vox_active"] = vs.active_mask()
            nodes[f"{tag}_vox_dims"] = vs.grid_dims
    return nodes


def predict(params: TrackerParams, pair: PatchPair) -> TrackerOutput:
    """Deterministic numpy-in, numpy-out prediction."""
    rec = Recording()
    nodes = pair_nodes(rec, pair, params.config)
    return forward(rec, params, nodes).to_output()
