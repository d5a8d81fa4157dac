"""Benchmark report serialization: canonical JSON with a schema key.

Keys are sorted and floats use shortest-round-trip repr, so identical
reports serialize to identical bytes.  The volatile wall-clock block lives
under the dedicated "timing" key; drop it (set to None) when byte-stable
output matters.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict

from ..boxes import BBox
from .benchmark import BenchmarkReport, SequenceResult
from .metrics import FrameRecord

SCHEMA = "rgbe-advbench/report/v1"


class ReportError(ValueError):
    pass


class ReportVersionError(ReportError):
    pass


def _box_list(b: BBox):
    return [b.x, b.y, b.w, b.h]


def _record_dict(r: FrameRecord) -> dict:
    return {
        "frame": r.frame_idx,
        "gt": _box_list(r.gt),
        "pred": _box_list(r.pred),
        "center_error": r.center_error,
        "norm_center_error": r.norm_center_error,
        "iou": r.iou,
        "target_distance": r.target_distance,
    }


def _check_finite(value, where):
    if isinstance(value, float) and not math.isfinite(value):
        raise ReportError(f"non-finite metric in report: {where}")


def report_to_dict(report: BenchmarkReport) -> dict:
    doc = {
        "schema": SCHEMA,
        "manifest": report.manifest,
        "pr": report.pr,
        "npr": report.npr,
        "sr": report.sr,
        "sequences": [],
    }
    if report.timing is not None:
        doc["timing"] = report.timing
    for s in report.sequences:
        doc["sequences"].append({
            "name": s.name,
            "pr": s.pr,
            "npr": s.npr,
            "sr": s.sr,
            "mean_target_distance": s.mean_target_distance,
            "warm_cold": [list(w) for w in s.warm_cold],
            "error": s.error,
            "records": [_record_dict(r) for r in s.records],
        })
    return doc


def write_report(report: BenchmarkReport, path):
    doc = report_to_dict(report)
    for key in ("pr", "npr", "sr"):
        _check_finite(doc[key], key)
    for s in doc["sequences"]:
        for key in ("pr", "npr", "sr", "mean_target_distance"):
            _check_finite(s[key], f"{s['name']}.{key}")
        for r in s["records"]:
            for key in ("center_error", "norm_center_error", "iou"):
                _check_finite(r[key], f"{s['name']}[{r['frame']}].{key}")
    try:
        text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False)
    except ValueError as exc:
        raise ReportError(f"report not serializable: {exc}") from exc
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def _record_from_dict(d: dict) -> FrameRecord:
    return FrameRecord(
        frame_idx=d["frame"], gt=BBox(*d["gt"]), pred=BBox(*d["pred"]),
        center_error=d["center_error"],
        norm_center_error=d["norm_center_error"], iou=d["iou"],
        target_distance=d["target_distance"])


def read_report(path) -> BenchmarkReport:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    schema = doc.get("schema")
    if schema != SCHEMA:
        raise ReportVersionError(
            f"{path}: schema {schema!r} not supported (expected {SCHEMA!r})")
    sequences = []
    for s in doc["sequences"]:
        sequences.append(SequenceResult(
            name=s["name"], pr=s["pr"], npr=s["npr"], sr=s["sr"],
            mean_target_distance=s["mean_target_distance"],
            warm_cold=[tuple(w) for w in s["warm_cold"]],
            error=s["error"],
            records=[_record_from_dict(r) for r in s["records"]]))
    return BenchmarkReport(manifest=doc["manifest"], sequences=sequences,
                           pr=doc["pr"], npr=doc["npr"], sr=doc["sr"],
                           timing=doc.get("timing"))
