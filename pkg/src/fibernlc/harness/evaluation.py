"""Equalizing whole frames and scoring them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fibernlc.channel.metrics import q_factor
from fibernlc.channel.signals import SymbolFrame, swap_polarization
from fibernlc.complexity import total_rmps
from fibernlc.model.framing import periodic_blocks
from fibernlc.model.transformer import TransformerNLC, power_scale

_CHUNK = 32


@dataclass(frozen=True)
class EvalResult:
    q_db: float
    launch_power: float
    rmps_total: float
    config_id: str
    masked: bool
    q_x: float = math.nan
    q_y: float = math.nan
    q_linear: float = math.nan

    @property
    def gain_db(self) -> float:
        return self.q_db - self.q_linear


def linear_q(frame: SymbolFrame) -> float:
    """Q of the un-equalized frame, averaged in dB over the polarizations."""
    return 0.5 * (q_factor(frame, 0) + q_factor(frame, 1))


def estimate_x(model: TransformerNLC, frame: SymbolFrame, inference_power=None, sparse=False) -> np.ndarray:
    """Complex X-distortion estimate for every symbol of ``frame``, power-scaled.

    The frame is treated as periodic so that every symbol gets context.
    """
    if inference_power is None:
        inference_power = frame.launch_power
    blocks, targets = periodic_blocks(frame.components, model.config)
    est = np.zeros(len(frame), dtype=complex)
    for i in range(0, len(blocks), _CHUNK):
        out, _ = model.forward(blocks[i : i + _CHUNK], sparse=sparse)
        tgt = targets[i : i + _CHUNK]
        keep = tgt >= 0
        est[tgt[keep]] = out[..., 0][keep] + 1j * out[..., 1][keep]
    return power_scale(inference_power, model.config.train_power) * est


def equalize(model: TransformerNLC, frame: SymbolFrame, inference_power=None, sparse=False) -> SymbolFrame:
    """Subtract estimated distortion from both polarizations (Y via swapping)."""
    ex = estimate_x(model, frame, inference_power, sparse)
    ey = estimate_x(model, swap_polarization(frame), inference_power, sparse)
    return frame.with_rx(frame.rx - np.stack([ex, ey]))


def evaluate(
    model: TransformerNLC,
    frame: SymbolFrame,
    inference_power: float | None = None,
    config_id: str = "",
    sparse: bool = False,
) -> EvalResult:
    """Q after equalization, averaged in dB over the two polarizations."""
    eq = equalize(model, frame, inference_power, sparse)
    q_x, q_y = q_factor(eq, 0), q_factor(eq, 1)
    q_lin = linear_q(frame)
    return EvalResult(
        q_db=0.5 * (q_x + q_y),
        launch_power=frame.launch_power if inference_power is None else inference_power,
        rmps_total=total_rmps(model.config).total_rmps,
        config_id=config_id,
        masked=model.config.masked,
        q_x=q_x,
        q_y=q_y,
        q_linear=q_lin,
    )
