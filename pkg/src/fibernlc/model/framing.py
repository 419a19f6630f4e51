"""Cutting symbol frames into model input blocks."""

from __future__ import annotations

import numpy as np

from fibernlc.channel.signals import SymbolFrame
from fibernlc.errors import FramingError
from fibernlc.model.config import ModelConfig


def frame_block(frame: SymbolFrame, start: int, config: ModelConfig) -> np.ndarray:
    """(b + 2t, 4) input whose middle b rows are the targets ``start .. start+b-1``."""
    t, b = config.tap, config.block
    if start < t or start + b + t > len(frame):
        raise FramingError(
            f"block at {start} needs symbols {start - t}..{start + b + t - 1}, frame has {len(frame)}"
        )
    return frame.components[start - t : start + b + t]


def tile_starts(n: int, config: ModelConfig) -> np.ndarray:
    """Target-block starts tiling a frame without wrap-around (floor((n - 2t)/b) blocks)."""
    t, b = config.tap, config.block
    count = (n - 2 * t) // b
    if count < 1:
        raise FramingError(f"frame of {n} symbols is shorter than one block ({b + 2 * t})")
    return t + b * np.arange(count)


def periodic_blocks(components: np.ndarray, config: ModelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Blocks covering every symbol of a periodic sequence exactly once.

    Simulated frames are circular, so context is taken by wrapping around.
    Returns (blocks, targets) where ``blocks`` is (count, b + 2t, 4) and
    ``targets`` is (count, b) holding the frame index each output maps to, or
    -1 for outputs of the final block that repeat symbols already covered.
    """
    t, b = config.tap, config.block
    n = components.shape[0]
    if n < b:
        raise FramingError(f"frame of {n} symbols is shorter than one block ({b})")
    count = -(-n // b)
    starts = b * np.arange(count)
    if count * b > n:
        starts[-1] = n - b
    idx = (starts[:, None] + np.arange(-t, b + t)[None, :]) % n
    targets = starts[:, None] + np.arange(b)[None, :]
    if count * b > n:
        overlap = count * b - n
        targets[-1, :overlap] = -1
    return components[idx], targets
