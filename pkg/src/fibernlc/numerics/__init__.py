"""Small dense-array engine: layers with analytic gradients, Adam, checkpoints."""

from fibernlc.numerics.checkpoint import load_tensors, save_tensors
from fibernlc.numerics.layers import (
    attention_backward,
    attention_forward,
    conv1d_backward,
    conv1d_forward,
    count_multiplications,
    layer_norm_backward,
    layer_norm_forward,
    leaky_relu_backward,
    leaky_relu_forward,
    linear_backward,
    linear_forward,
    relu_backward,
    relu_forward,
    softmax_rows_backward,
    softmax_rows_forward,
    sparse_attention_forward,
)
from fibernlc.numerics.optim import Parameter, adam_step, warmup_lr

__all__ = [
    "Parameter", "adam_step", "warmup_lr", "count_multiplications",
    "linear_forward", "linear_backward", "conv1d_forward", "conv1d_backward",
    "leaky_relu_forward", "leaky_relu_backward", "relu_forward", "relu_backward",
    "softmax_rows_forward", "softmax_rows_backward", "layer_norm_forward",
    "layer_norm_backward", "attention_forward", "attention_backward",
    "sparse_attention_forward", "save_tensors", "load_tensors",
]
