"""Benchmark metrics, the tracking-evaluation harness, and reports."""

from .benchmark import (
    SCALE_CLAMP,
    SIZE_SMOOTHING,
    THREADS_ENV,
    BenchmarkReport,
    SequenceResult,
    run_benchmark,
    track_sequence,
)
from .metrics import (
    NPR_THRESHOLDS,
    PR_THRESHOLD_PX,
    SR_THRESHOLDS,
    FrameRecord,
    iou,
    norm_precision_rate,
    precision_curve,
    precision_rate,
    success_curve,
    success_rate,
)
from .plots import line_chart
from .report import SCHEMA, ReportError, ReportVersionError, read_report, report_to_dict, write_report

__all__ = [
    "BenchmarkReport",
    "FrameRecord",
    "NPR_THRESHOLDS",
    "PR_THRESHOLD_PX",
    "ReportError",
    "ReportVersionError",
    "SCALE_CLAMP",
    "SCHEMA",
    "SIZE_SMOOTHING",
    "SR_THRESHOLDS",
    "SequenceResult",
    "THREADS_ENV",
    "iou",
    "line_chart",
    "norm_precision_rate",
    "precision_curve",
    "precision_rate",
    "read_report",
    "report_to_dict",
    "run_benchmark",
    "success_curve",
    "success_rate",
    "track_sequence",
    "write_report",
]
