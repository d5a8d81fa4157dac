"""Tracker checkpoint file: magic "SGTK1", JSON header, little-endian
float64 weight blob, trailing CRC-32 over everything before it."""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import asdict

import numpy as np

from .model import TrackerConfig, TrackerParams

MAGIC = b"SGTK1"


class CheckpointError(Exception):
    pass


class VersionError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


def save_params(params: TrackerParams, path):
    names = sorted(params.weights)
    header = {
        "config": asdict(params.config),
        "weights": [[n, list(params.weights[n].shape)] for n in names],
        "step_count": params.step_count,
        "seed": params.seed,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = b"".join(np.ascontiguousarray(params.weights[n], dtype="<f8").tobytes()
                    for n in names)
    payload = MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + blob
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_params(path) -> TrackerParams:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC) + 8:
        raise ChecksumError(f"{path}: file truncated")
    if data[:len(MAGIC)] != MAGIC:
        raise VersionError(
            f"{path}: bad magic {data[:len(MAGIC)]!r}, expected {MAGIC!r}")
    payload, crc_bytes = data[:-4], data[-4:]
    (crc,) = struct.unpack("<I", crc_bytes)
    if zlib.crc32(payload) != crc:
        raise ChecksumError(f"{path}: CRC mismatch, file corrupted")
    (header_len,) = struct.unpack("<I", payload[5:9])
    header = json.loads(payload[9:9 + header_len].decode("utf-8"))
    config = TrackerConfig(**{k: tuple(v) if isinstance(v, list) else v
                              for k, v in header["config"].items()})
    weights = {}
    offset = 9 + header_len
    for name, shape in header["weights"]:
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
        weights[name] = arr.reshape(shape).astype(np.float64)
        offset += count * 8
    if offset != len(payload):
        raise ChecksumError(f"{path}: weight blob size mismatch")
    return TrackerParams(config=config, weights=weights,
                         step_count=header["step_count"], seed=header["seed"])
