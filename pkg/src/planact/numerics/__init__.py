"""Differentiable tensor substrate: autodiff, parameters, seeded randomness."""

from .params import ParameterStore
from .rng import Rng, derive_seed
from .tensor import (
    NonFiniteValue,
    ShapeMismatch,
    Tensor,
    add,
    check_finite,
    concat,
    cross_entropy,
    div,
    embedding,
    finite_diff,
    gelu,
    grad,
    grad_enabled,
    layernorm,
    masked_fill,
    matmul,
    mse,
    mul,
    no_grad,
    reduce_mean,
    reduce_sum,
    reshape,
    set_finite_check,
    softmax,
    sub,
    take,
    transpose,
)

__all__ = [
    "NonFiniteValue", "ShapeMismatch", "Tensor", "ParameterStore", "Rng",
    "derive_seed", "add", "sub", "mul", "div", "matmul", "reshape",
    "transpose", "concat", "take", "reduce_sum", "reduce_mean", "softmax",
    "masked_fill", "layernorm", "gelu", "embedding", "mse", "cross_entropy",
    "grad", "finite_diff", "no_grad", "grad_enabled", "check_finite",
    "set_finite_check",
]
