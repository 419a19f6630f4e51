"""Transformer-encoder equalizer with hand-written backward pass.

Pipeline per block of ``b + 2t`` received symbols (4 real components each):
embedding generator -> sinusoidal positions (scaled by 1/sqrt(d_model))
-> L post-LN encoder layers ->
window selection around each of the ``b`` targets -> 3-layer output MLP
giving the estimated (E_XI, E_XQ) distortion per target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fibernlc.channel.signals import SymbolFrame
from fibernlc.errors import ConfigError, ShapeError
from fibernlc.masks import AttentionMask, block_mask
from fibernlc.model.config import ModelConfig
from fibernlc.model.framing import frame_block
from fibernlc.numerics import layers as nn
from fibernlc.numerics.checkpoint import load_tensors, save_tensors
from fibernlc.numerics.optim import Parameter

LEAKY_SLOPE = 0.2
OUTPUT_HIDDEN = (2, 10)


def positional_encoding(length: int, d_model: int) -> np.ndarray:
    """Fixed sin/cos table; even columns sin, odd columns cos."""
    pos = np.arange(length)[:, None]
    i = np.arange(0, d_model, 2)[None, :]
    angle = pos / np.power(10000.0, i / d_model)
    pe = np.zeros((length, d_model))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle[:, : d_model // 2])
    return pe


def power_scale(inference_power: float, train_power: float) -> float:
    """Distortion scale between launch powers (dB difference / 10)."""
    return 10 ** ((inference_power - train_power) / 10)


def window_indices(config: ModelConfig) -> np.ndarray:
    """(b, W) encoder-output positions feeding each target's output MLP."""
    first = config.ell // 2 - config.window
    return first + np.arange(config.block)[:, None] + np.arange(config.window_size)[None, :]


@dataclass
class DistortionEstimate:
    e_xi: np.ndarray
    e_xq: np.ndarray

    @property
    def complex(self) -> np.ndarray:
        return self.e_xi + 1j * self.e_xq


class TransformerNLC:
    """Parameters plus forward/backward of the equalizer.

    ``forward`` takes a batch of input blocks shaped (B, b + 2t, 4) and
    returns (B, b, 2) estimates together with a cache for ``backward``,
    which accumulates parameter gradients and returns the input gradient.
    """

    def __init__(self, config: ModelConfig, params: dict[str, Parameter] | None = None, seed: int = 0):
        self.config = config
        self.params = params if params is not None else self._init_params(seed)
        self.mask: AttentionMask | None = (
            block_mask(config.ell, config.rho, config.block, config.center_row)
            if config.masked
            else None
        )
        # a unit-amplitude table would swamp embeddings of O(1/sqrt(d)) per
        # component; scaling the constant table keeps them comparable for free
        self._pe = positional_encoding(config.seq_length, config.d_model) / math.sqrt(config.d_model)
        self._windows = window_indices(config)

    # -- parameters -----------------------------------------------------------

    def _shapes(self) -> dict[str, tuple[int, ...]]:
        c = self.config
        d, hk = c.d_model, c.key_size
        shapes: dict[str, tuple[int, ...]] = {}
        if c.embedding == "cnn":
            shapes["emb.conv.w"] = (c.kernel, 4, d)
            shapes["emb.conv.b"] = (d,)
        elif c.embedding == "mlp1":
            shapes["emb.lin1.w"] = (4, d)
            shapes["emb.lin1.b"] = (d,)
        else:
            shapes["emb.lin1.w"] = (4, c.d_interm)
            shapes["emb.lin1.b"] = (c.d_interm,)
            shapes["emb.lin2.w"] = (c.d_interm, d)
            shapes["emb.lin2.b"] = (d,)
        for i in range(c.layers):
            p = f"layer{i}."
            for name in ("q", "k", "v"):
                shapes[p + f"w{name}"] = (d, hk)
                shapes[p + f"b{name}"] = (hk,)
            shapes[p + "wo"] = (hk, d)
            shapes[p + "bo"] = (d,)
            shapes[p + "ln1.g"] = (d,)
            shapes[p + "ln1.b"] = (d,)
            shapes[p + "ffn.w1"] = (d, c.d_ff)
            shapes[p + "ffn.b1"] = (c.d_ff,)
            shapes[p + "ffn.w2"] = (c.d_ff, d)
            shapes[p + "ffn.b2"] = (d,)
            shapes[p + "ln2.g"] = (d,)
            shapes[p + "ln2.b"] = (d,)
        widths = (c.window_size * d,) + OUTPUT_HIDDEN + (2,)
        for j in range(3):
            shapes[f"out.w{j + 1}"] = (widths[j], widths[j + 1])
            shapes[f"out.b{j + 1}"] = (widths[j + 1],)
        return shapes

    def _init_params(self, seed: int) -> dict[str, Parameter]:
        """Uniform +-1/sqrt(fan_in) for weights and biases; layer norms start at identity."""
        rng = np.random.Generator(np.random.PCG64(seed))
        shapes = self._shapes()
        params = {}
        for name, shape in shapes.items():
            prefix, last = name.rsplit(".", 1)
            if ".ln" in name:
                value = np.ones(shape) if last == "g" else np.zeros(shape)
            else:
                weight = name if last[0] == "w" else f"{prefix}.w{last[1:]}"
                bound = 1.0 / math.sqrt(math.prod(shapes[weight][:-1]))
                value = rng.uniform(-bound, bound, size=shape)
            params[name] = Parameter(value)
        return params

    def parameters(self) -> list[Parameter]:
        return [self.params[k] for k in sorted(self.params)]

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def state(self) -> dict[str, np.ndarray]:
        return {k: p.value for k, p in self.params.items()}

    def save(self, path: str | Path) -> None:
        save_tensors(path, self.state(), self.config.to_dict())

    @classmethod
    def load(cls, path: str | Path) -> TransformerNLC:
        tensors, cfg = load_tensors(path)
        config = ModelConfig.from_dict(cfg)
        model = cls(config, {k: Parameter(v) for k, v in tensors.items()})
        expected = model._shapes()
        if set(expected) != set(tensors) or any(tensors[k].shape != s for k, s in expected.items()):
            raise ConfigError(f"{path}: checkpoint tensors do not match the stored config")
        return model

    def copy(self) -> TransformerNLC:
        return TransformerNLC(self.config, {k: Parameter(p.value.copy()) for k, p in self.params.items()})

    # -- forward ----------------------------------------------------------------

    def forward(self, x, *, use_mask=True, sparse=False, dtype=np.float64, keep_scores=False):
        """Run the model on (B, b + 2t, 4) input blocks.

        ``sparse`` evaluates masked attention only on unmasked coordinates
        (inference only; no backward).  ``keep_scores`` stores the
        per-layer pre-softmax scores q k^T / sqrt(d_k) in the cache.
        """
        c = self.config
        x = np.asarray(x, dtype=dtype)
        if x.ndim == 2:
            x = x[None]
        if x.shape[1:] != (c.input_length, 4):
            raise ShapeError(f"expected blocks of shape (B, {c.input_length}, 4), got {x.shape}")
        w = {k: p.value.astype(dtype, copy=False) for k, p in self.params.items()}
        mask = self.mask.matrix.astype(dtype) if (use_mask and self.mask is not None) else None
        if sparse and mask is not None:
            coords = self.mask.coordinates()
        cache: dict = {"layers": [], "scores": []}

        if c.embedding == "cnn":
            h, cache["emb.conv"] = nn.conv1d_forward(x, w["emb.conv.w"], w["emb.conv.b"])
            h, cache["emb.act"] = nn.leaky_relu_forward(h, LEAKY_SLOPE)
        elif c.embedding == "mlp1":
            h, cache["emb.lin1"] = nn.linear_forward(x, w["emb.lin1.w"], w["emb.lin1.b"])
        else:
            h, cache["emb.lin1"] = nn.linear_forward(x, w["emb.lin1.w"], w["emb.lin1.b"])
            h, cache["emb.act"] = nn.leaky_relu_forward(h, LEAKY_SLOPE)
            h, cache["emb.lin2"] = nn.linear_forward(h, w["emb.lin2.w"], w["emb.lin2.b"])
        h = h + self._pe.astype(dtype)

        batch, n = h.shape[:2]
        heads, dk = c.heads, c.d_k

        def split(t):
            return t.reshape(batch, n, heads, dk).transpose(0, 2, 1, 3)

        for i in range(c.layers):
            p = f"layer{i}."
            lc = {}
            q, lc["q"] = nn.linear_forward(h, w[p + "wq"], w[p + "bq"])
            k, lc["k"] = nn.linear_forward(h, w[p + "wk"], w[p + "bk"])
            v, lc["v"] = nn.linear_forward(h, w[p + "wv"], w[p + "bv"])
            if sparse and mask is not None:
                att = nn.sparse_attention_forward(split(q), split(k), split(v), *coords)
            else:
                att, scores, lc["att"] = nn.attention_forward(split(q), split(k), split(v), mask)
                if keep_scores:
                    cache["scores"].append(scores)
            att = att.transpose(0, 2, 1, 3).reshape(batch, n, heads * dk)
            o, lc["o"] = nn.linear_forward(att, w[p + "wo"], w[p + "bo"])
            y, lc["ln1"] = nn.layer_norm_forward(o + h, w[p + "ln1.g"], w[p + "ln1.b"])
            f, lc["ffn1"] = nn.linear_forward(y, w[p + "ffn.w1"], w[p + "ffn.b1"])
            f, lc["relu"] = nn.relu_forward(f)
            f, lc["ffn2"] = nn.linear_forward(f, w[p + "ffn.w2"], w[p + "ffn.b2"])
            h, lc["ln2"] = nn.layer_norm_forward(f + y, w[p + "ln2.g"], w[p + "ln2.b"])
            cache["layers"].append(lc)

        feats = h[:, self._windows, :].reshape(batch, c.block, c.window_size * c.d_model)
        out, cache["out1"] = nn.linear_forward(feats, w["out.w1"], w["out.b1"])
        out, cache["out1.act"] = nn.leaky_relu_forward(out, LEAKY_SLOPE)
        out, cache["out2"] = nn.linear_forward(out, w["out.w2"], w["out.b2"])
        out, cache["out2.act"] = nn.leaky_relu_forward(out, LEAKY_SLOPE)
        out, cache["out3"] = nn.linear_forward(out, w["out.w3"], w["out.b3"])
        cache["shape"] = (batch, n)
        return out, cache

    # -- backward ---------------------------------------------------------------

    def _acc(self, name, grad):
        self.params[name].grad += grad

    def backward(self, dout, cache) -> np.ndarray:
        """Accumulate parameter gradients for upstream ``dout``; return d(input)."""
        c = self.config
        batch, n = cache["shape"]
        heads, dk = c.heads, c.d_k

        def merge(t):
            return t.transpose(0, 2, 1, 3).reshape(batch, n, heads * dk)

        def split(t):
            return t.reshape(batch, n, heads, dk).transpose(0, 2, 1, 3)

        d, dw, db = nn.linear_backward(dout, cache["out3"])
        self._acc("out.w3", dw), self._acc("out.b3", db)
        d = nn.leaky_relu_backward(d, cache["out2.act"])
        d, dw, db = nn.linear_backward(d, cache["out2"])
        self._acc("out.w2", dw), self._acc("out.b2", db)
        d = nn.leaky_relu_backward(d, cache["out1.act"])
        d, dw, db = nn.linear_backward(d, cache["out1"])
        self._acc("out.w1", dw), self._acc("out.b1", db)

        dfeat = d.reshape(batch, c.block, c.window_size, c.d_model)
        dh = np.zeros((batch, n, c.d_model), dtype=dout.dtype)
        first = c.ell // 2 - c.window
        for j in range(c.window_size):
            dh[:, first + j : first + j + c.block, :] += dfeat[:, :, j, :]

        for i in reversed(range(c.layers)):
            p = f"layer{i}."
            lc = cache["layers"][i]
            ds, dg, db = nn.layer_norm_backward(dh, lc["ln2"])
            self._acc(p + "ln2.g", dg), self._acc(p + "ln2.b", db)
            df, dw, db = nn.linear_backward(ds, lc["ffn2"])
            self._acc(p + "ffn.w2", dw), self._acc(p + "ffn.b2", db)
            df = nn.relu_backward(df, lc["relu"])
            dy, dw, db = nn.linear_backward(df, lc["ffn1"])
            self._acc(p + "ffn.w1", dw), self._acc(p + "ffn.b1", db)
            dy = dy + ds
            ds, dg, db = nn.layer_norm_backward(dy, lc["ln1"])
            self._acc(p + "ln1.g", dg), self._acc(p + "ln1.b", db)
            datt, dw, db = nn.linear_backward(ds, lc["o"])
            self._acc(p + "wo", dw), self._acc(p + "bo", db)
            dq, dk_, dv = nn.attention_backward(split(datt), lc["att"])
            dh = ds
            for name, g in (("q", dq), ("k", dk_), ("v", dv)):
                dxn, dw, db = nn.linear_backward(merge(g), lc[name])
                self._acc(p + f"w{name}", dw), self._acc(p + f"b{name}", db)
                dh = dh + dxn

        if c.embedding == "cnn":
            dh = nn.leaky_relu_backward(dh, cache["emb.act"])
            dx, dw, db = nn.conv1d_backward(dh, cache["emb.conv"])
            self._acc("emb.conv.w", dw), self._acc("emb.conv.b", db)
        elif c.embedding == "mlp1":
            dx, dw, db = nn.linear_backward(dh, cache["emb.lin1"])
            self._acc("emb.lin1.w", dw), self._acc("emb.lin1.b", db)
        else:
            dh, dw, db = nn.linear_backward(dh, cache["emb.lin2"])
            self._acc("emb.lin2.w", dw), self._acc("emb.lin2.b", db)
            dh = nn.leaky_relu_backward(dh, cache["emb.act"])
            dx, dw, db = nn.linear_backward(dh, cache["emb.lin1"])
            self._acc("emb.lin1.w", dw), self._acc("emb.lin1.b", db)
        return dx

    # -- inference ----------------------------------------------------------------

    def estimate(self, blocks, **kwargs) -> np.ndarray:
        out, _ = self.forward(blocks, **kwargs)
        return out

    def predict(
        self,
        frame: SymbolFrame,
        start: int,
        inference_power: float | None = None,
        **kwargs,
    ) -> DistortionEstimate:
        """Distortion estimate for targets ``start .. start + b - 1`` of ``frame``.

        Raw estimates are scaled by the launch-power ratio between
        ``inference_power`` (default: the frame's power) and the training power.
        """
        if inference_power is None:
            inference_power = frame.launch_power
        out = self.estimate(frame_block(frame, start, self.config), **kwargs)[0]
        alpha = power_scale(inference_power, self.config.train_power)
        return DistortionEstimate(alpha * out[:, 0], alpha * out[:, 1])


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient with respect to ``pred``."""
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size
