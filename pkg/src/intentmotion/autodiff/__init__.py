from .tensor import (
    AutodiffError,
    Tensor,
    add,
    backward,
    bilinear2d,
    concat,
    conv2d_same,
    dense,
    div,
    exp,
    log,
    log_sinh,
    logsumexp,
    matmul,
    maxpool2,
    mean,
    mul,
    pow_const,
    relu,
    reshape,
    sigmoid,
    softmax,
    softplus,
    sqrt,
    sub,
    sum_,
    sum_sq,
    take,
    tanh,
    upsample2_nearest,
)
from .store import CHECKPOINT_MAGIC, OptimizerError, ParamStore
from .check import grad_check

__all__ = [
    "AutodiffError", "Tensor", "add", "backward", "bilinear2d", "concat",
    "conv2d_same", "dense", "div", "exp", "log", "log_sinh", "logsumexp",
    "matmul", "maxpool2", "mean", "mul", "pow_const", "relu", "reshape",
    "sigmoid", "softmax", "softplus", "sqrt", "sub", "sum_", "sum_sq",
    "take", "tanh", "upsample2_nearest",
    "CHECKPOINT_MAGIC", "OptimizerError", "ParamStore", "grad_check",
]
