from .adam import AdamState, adam_step
from .tensor import (
    Tensor,
    binary_cross_entropy,
    concat,
    dense,
    embedding_lookup,
    global_max_pool,
    relu,
    reshape,
    row_convolution,
    tensor_sum,
)

__all__ = [
    "AdamState", "adam_step",
    "Tensor", "binary_cross_entropy", "concat", "dense", "embedding_lookup",
    "global_max_pool", "relu", "reshape", "row_convolution", "tensor_sum",
]
