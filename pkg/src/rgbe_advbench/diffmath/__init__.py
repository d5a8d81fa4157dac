"""Minimal reverse-mode differentiation engine."""

from .engine import (
    DiffError,
    DiffValue,
    DomainError,
    GradientTable,
    Recording,
    UsageError,
    absolute,
    add,
    backward,
    clamp,
    concat,
    div,
    exp,
    extract_patches,
    getitem,
    log,
    matmul,
    maximum,
    mean,
    minimum,
    mul,
    neg,
    power,
    reduce_max,
    reduce_sum,
    reshape,
    select,
    sigmoid,
    sqrt,
    stack,
    stop_gradient,
    sub,
    tanh,
    transpose,
    trilinear_splat,
)
from .gradcheck import finite_diff_check

__all__ = [
    "DiffError",
    "DiffValue",
    "DomainError",
    "GradientTable",
    "Recording",
    "UsageError",
    "absolute",
    "add",
    "backward",
    "clamp",
    "concat",
    "div",
    "exp",
    "extract_patches",
    "finite_diff_check",
    "getitem",
    "log",
    "matmul",
    "maximum",
    "mean",
    "minimum",
    "mul",
    "neg",
    "power",
    "reduce_max",
    "reduce_sum",
    "reshape",
    "select",
    "sigmoid",
    "sqrt",
    "stack",
    "stop_gradient",
    "sub",
    "tanh",
    "transpose",
    "trilinear_splat",
]
