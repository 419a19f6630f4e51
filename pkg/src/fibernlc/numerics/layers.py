"""Layer primitives with explicit forward and backward passes.

Every ``*_forward`` returns ``(output, cache)``; the matching ``*_backward``
takes the upstream gradient and that cache.  Arrays are batched over all
leading axes; features live on the last axis.

Forward passes report their real multiplications to the innermost active
:func:`count_multiplications` context.  Additions, comparisons and the
piecewise-linear activations are free; a softmax costs one exponential and
one normalization per element.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from fibernlc.errors import ShapeError

LN_EPS = 1e-5


@dataclass
class MultCounter:
    total: int = 0


_counters: list[MultCounter] = []


@contextmanager
def count_multiplications():
    """Collect multiplication counts from forward passes run inside the block."""
    counter = MultCounter()
    _counters.append(counter)
    try:
        yield counter
    finally:
        _counters.pop()


def tally(n: int) -> None:
    """Add ``n`` multiplications to the innermost active counter, if any."""
    if _counters:
        _counters[-1].total += int(n)


def _batch(shape) -> int:
    return math.prod(shape[:-1])


# --- linear -----------------------------------------------------------------


def linear_forward(x, w, b):
    if x.shape[-1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ShapeError(f"linear: input {x.shape}, weight {w.shape}, bias {b.shape}")
    tally(_batch(x.shape) * w.shape[0] * w.shape[1])
    return x @ w + b, (x, w)


def linear_backward(dy, cache):
    x, w = cache
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return dy @ w.T, x2.T @ dy2, dy2.sum(axis=0)


# --- 1-D convolution ----------------------------------------------------------


def conv1d_forward(x, w, b):
    """Valid cross-correlation along axis -2.

    ``x`` is (..., length, in_ch); ``w`` is (k, in_ch, out_ch).
    """
    k, cin, cout = w.shape
    length = x.shape[-2]
    if x.shape[-1] != cin or b.shape != (cout,):
        raise ShapeError(f"conv1d: input {x.shape}, kernel {w.shape}, bias {b.shape}")
    if length < k:
        raise ShapeError(f"conv1d: sequence length {length} shorter than kernel {k}")
    windows = np.lib.stride_tricks.sliding_window_view(x, k, axis=-2)  # (..., L', cin, k)
    cols = np.swapaxes(windows, -1, -2).reshape(x.shape[:-2] + (length - k + 1, k * cin))
    tally(_batch(cols.shape) * k * cin * cout)
    return cols @ w.reshape(k * cin, cout) + b, (cols, w, x.shape)


def conv1d_backward(dy, cache):
    cols, w, xshape = cache
    k, cin, cout = w.shape
    dw = (cols.reshape(-1, k * cin).T @ dy.reshape(-1, cout)).reshape(k, cin, cout)
    db = dy.reshape(-1, cout).sum(axis=0)
    dcols = (dy @ w.reshape(k * cin, cout).T).reshape(dy.shape[:-1] + (k, cin))
    dx = np.zeros(xshape, dtype=dy.dtype)
    lout = dy.shape[-2]
    for j in range(k):
        dx[..., j : j + lout, :] += dcols[..., j, :]
    return dx, dw, db


# --- activations --------------------------------------------------------------


def leaky_relu_forward(x, slope=0.2):
    return np.where(x > 0, x, slope * x), (x > 0, slope)


def leaky_relu_backward(dy, cache):
    positive, slope = cache
    return np.where(positive, dy, slope * dy)


def relu_forward(x):
    return np.maximum(x, 0), x > 0


def relu_backward(dy, cache):
    return dy * cache


# --- softmax ------------------------------------------------------------------


def softmax_rows_forward(x):
    """Softmax over the last axis; rows that are entirely -inf give zeros."""
    tally(2 * x.size)
    peak = np.max(x, axis=-1, keepdims=True)
    peak = np.where(np.isneginf(peak), 0.0, peak)
    z = x - peak
    # exp(-inf) takes a slow path on common libms; masked entries are set directly
    finite = np.isfinite(z)
    e = np.exp(z, out=np.zeros_like(z), where=finite)
    total = e.sum(axis=-1, keepdims=True)
    y = e / np.where(total > 0, total, 1.0)
    return y, y


def softmax_rows_backward(dy, cache):
    y = cache
    return y * (dy - np.sum(dy * y, axis=-1, keepdims=True))


# --- layer norm ---------------------------------------------------------------


def layer_norm_forward(x, gain, bias, eps=LN_EPS):
    """Normalize each position vector, then scale by ``gain`` and add ``bias``.

    Costs three multiplications per element: the squaring inside the
    variance, the 1/sigma scaling and the gain.
    """
    if gain.shape != (x.shape[-1],) or bias.shape != gain.shape:
        raise ShapeError(f"layer_norm: input {x.shape}, gain {gain.shape}, bias {bias.shape}")
    tally(3 * x.size)
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    return xhat * gain + bias, (xhat, inv, gain)


def layer_norm_backward(dy, cache):
    xhat, inv, gain = cache
    d = xhat.shape[-1]
    dxhat = dy * gain
    dx = inv / d * (
        d * dxhat
        - dxhat.sum(axis=-1, keepdims=True)
        - xhat * np.sum(dxhat * xhat, axis=-1, keepdims=True)
    )
    dgain = (dy * xhat).reshape(-1, d).sum(axis=0)
    dbias = dy.reshape(-1, d).sum(axis=0)
    return dx, dgain, dbias


# --- scaled dot-product attention ---------------------------------------------


def attention_forward(q, k, v, mask=None):
    """softmax(q k^T / sqrt(d_k) + mask) v over the last two axes.

    ``q``, ``k``: (..., N, d_k); ``v``: (..., N, d_v); ``mask`` is an additive
    (N, N) matrix of 0 / -inf.  Returns the output, the pre-softmax scores
    (mask excluded) and the backward cache.
    """
    n, dk = q.shape[-2:]
    if mask is not None and mask.shape != (n, n):
        raise ShapeError(f"attention mask {mask.shape} does not match sequence length {n}")
    batch = math.prod(q.shape[:-2])
    tally(batch * n * n * dk)  # q k^T
    tally(batch * n * n)  # scaling
    scores = (q @ np.swapaxes(k, -1, -2)) * (1.0 / math.sqrt(dk))
    logits = scores if mask is None else scores + mask
    a, soft_cache = softmax_rows_forward(logits)
    tally(batch * n * n * v.shape[-1])  # a v
    return a @ v, scores, (q, k, v, a, soft_cache)


def attention_backward(dout, cache):
    q, k, v, a, soft_cache = cache
    dv = np.swapaxes(a, -1, -2) @ dout
    da = dout @ np.swapaxes(v, -1, -2)
    dlogits = softmax_rows_backward(da, soft_cache) * (1.0 / math.sqrt(q.shape[-1]))
    dq = dlogits @ k
    dk = np.swapaxes(dlogits, -1, -2) @ q
    return dq, dk, dv


def sparse_attention_forward(q, k, v, rows, cols):
    """Masked attention evaluated only at the unmasked (row, col) pairs.

    ``rows``/``cols`` list the unmasked coordinates sorted by row.  Rows with
    no unmasked entry produce zeros.  Multiplication count scales with the
    number of unmasked entries, not with N^2.
    """
    n, dk = q.shape[-2:]
    nnz = rows.size
    batch = math.prod(q.shape[:-2])
    tally(batch * nnz * dk)
    tally(batch * nnz)
    tally(2 * batch * nnz)
    tally(batch * nnz * v.shape[-1])
    scores = np.einsum("...ed,...ed->...e", q[..., rows, :], k[..., cols, :]) * (1.0 / math.sqrt(dk))
    counts = np.bincount(rows, minlength=n)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    live = counts > 0
    seg = starts[live]
    peak = np.maximum.reduceat(scores, seg, axis=-1)
    e = np.exp(scores - np.repeat(peak, counts[live], axis=-1))
    total = np.add.reduceat(e, seg, axis=-1)
    weights = e / np.repeat(total, counts[live], axis=-1)
    mixed = np.add.reduceat(weights[..., None] * v[..., cols, :], seg, axis=-2)
    out = np.zeros(q.shape[:-1] + (v.shape[-1],), dtype=np.result_type(q, v))
    out[..., np.flatnonzero(live), :] = mixed
    return out
