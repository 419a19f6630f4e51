"""Real multiplications per equalized symbol (RMPS).

Counting rules, shared with the instrumented counter in
:mod:`fibernlc.numerics.layers`:

* a linear or convolution layer costs in_features * out_features per output row;
* attention scores cost N^2 d_k per head, plus 3 N^2 for scaling and softmax
  (exponential and normalization), where N = l + b, or the unmasked-entry
  count when a mask is applied;
* mixing the values with the attention weights costs N^2 d_v per head;
* a layer norm costs 3 per element (square, 1/sigma, gain);
* activations, additions and the positional encoding are free.

Per-block totals are divided by b.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from fibernlc.masks import AttentionMask, block_mask
from fibernlc.model.config import ModelConfig
from fibernlc.model.transformer import OUTPUT_HIDDEN

CSV_FIELDS = (
    "embedding", "tap", "block", "d_model", "key_size", "heads", "layers", "d_ff",
    "window", "rho", "masked", "embedding_rmps", "projection_rmps", "attention_rmps",
    "value_mix_rmps", "ffn_rmps", "layernorm_rmps", "output_mlp_rmps", "total_rmps",
)


def attention_rmps_dense(heads: int, block: int, ell: int, d_k: int) -> float:
    """Score-side attention cost of one layer: (h N^2 d_k + 3 h N^2) / b."""
    n2 = (block + ell) ** 2
    return (heads * n2 * d_k + 3 * heads * n2) / block


def attention_rmps_masked(mask: AttentionMask, heads: int, block: int, d_k: int) -> float:
    """As :func:`attention_rmps_dense` with N^2 replaced by the unmasked count."""
    nz = mask.zero_count()
    return (heads * nz * d_k + 3 * heads * nz) / block


@dataclass(frozen=True)
class ComplexityReport:
    embedding_rmps: float
    projection_rmps: float
    attention_rmps: float
    value_mix_rmps: float
    ffn_rmps: float
    layernorm_rmps: float
    output_mlp_rmps: float
    masked: bool
    config: ModelConfig

    @property
    def total_rmps(self) -> float:
        return (
            self.embedding_rmps
            + self.projection_rmps
            + self.attention_rmps
            + self.value_mix_rmps
            + self.ffn_rmps
            + self.layernorm_rmps
            + self.output_mlp_rmps
        )

    def to_row(self) -> dict:
        c = self.config
        row = {k: getattr(c, k) for k in CSV_FIELDS[:9]}
        row["rho"] = "" if c.rho is None else c.rho
        row["masked"] = int(self.masked)
        parts = {k: v for k, v in asdict(self).items() if k.endswith("_rmps")}
        row.update(parts)
        row["total_rmps"] = self.total_rmps
        return row

    def to_csv_row(self) -> str:
        row = self.to_row()
        return ",".join(str(row[k]) for k in CSV_FIELDS)


def _embedding_mults(config: ModelConfig) -> int:
    c = config
    if c.embedding == "cnn":
        return 4 * c.kernel * c.d_model * c.seq_length
    if c.embedding == "mlp1":
        return 4 * c.d_model * c.input_length
    return (4 * c.d_interm + c.d_interm * c.d_model) * c.input_length


def total_rmps(config: ModelConfig, mask: AttentionMask | None = None) -> ComplexityReport:
    """Per-part RMPS of one forward pass.

    A masked config (``rho`` set) is costed on its block mask unless an
    explicit ``mask`` is passed.
    """
    c = config
    b, n, d = c.block, c.seq_length, c.d_model
    hk = c.key_size
    if mask is None and c.masked:
        mask = block_mask(c.ell, c.rho, b, c.center_row)
    pairs = mask.zero_count() if mask is not None else n * n
    per_layer_att = (c.heads * pairs * c.d_k + 3 * c.heads * pairs) / b
    widths = (c.window_size * d,) + OUTPUT_HIDDEN + (2,)
    return ComplexityReport(
        embedding_rmps=_embedding_mults(c) / b,
        projection_rmps=c.layers * n * (3 * d * hk + hk * d) / b,
        attention_rmps=c.layers * per_layer_att,
        value_mix_rmps=c.layers * c.heads * pairs * c.d_k / b,
        ffn_rmps=c.layers * 2 * n * d * c.d_ff / b,
        layernorm_rmps=c.layers * 2 * 3 * n * d / b,
        output_mlp_rmps=float(sum(widths[i] * widths[i + 1] for i in range(3))),
        masked=mask is not None,
        config=c,
    )


@dataclass(frozen=True)
class BlockCurve:
    blocks: np.ndarray
    total: np.ndarray
    attention: np.ndarray
    attention_minimizer: int


def rmps_vs_block(config: ModelConfig, blocks) -> BlockCurve:
    """Total and attention-only RMPS over block sizes.

    The attention term c1 (2l + l^2/b + b), c1 = h d_k + 3h, is minimized at
    b = l.
    """
    blocks = np.asarray(list(blocks), dtype=int)
    total, att = [], []
    for b in blocks:
        rep = total_rmps(replace(config, block=int(b)))
        total.append(rep.total_rmps)
        att.append(rep.attention_rmps)
    return BlockCurve(blocks, np.array(total), np.array(att), config.ell)
