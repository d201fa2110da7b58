"""Linear algebra, differentiable ops, and the gradient engine."""

from .gradcheck import GradCheckReport, check_gradients, relative_error
from .nn import conv1d, global_maxpool, lstm_sequence, maxpool1d
from .optim import AdamState, adam_step
from .tensor import (
    GradientTape,
    Tensor,
    add,
    backward,
    concat,
    flip,
    log,
    matmul,
    mean_all,
    mul,
    relu,
    reshape,
    scale,
    sigmoid,
    softmax,
    softmax_values,
    sub,
    sum_all,
    tanh,
)

__all__ = [
    "AdamState",
    "GradCheckReport",
    "GradientTape",
    "Tensor",
    "adam_step",
    "add",
    "backward",
    "check_gradients",
    "concat",
    "conv1d",
    "flip",
    "global_maxpool",
    "log",
    "lstm_sequence",
    "matmul",
    "maxpool1d",
    "mean_all",
    "mul",
    "relative_error",
    "relu",
    "reshape",
    "scale",
    "sigmoid",
    "softmax",
    "softmax_values",
    "sub",
    "sum_all",
    "tanh",
]
