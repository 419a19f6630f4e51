"""Transformer equalizer: configuration, block framing and the network."""

from fibernlc.channel.signals import swap_polarization
from fibernlc.model.config import REGION_16QAM, ModelConfig, region_config
from fibernlc.model.framing import frame_block, periodic_blocks, tile_starts
from fibernlc.model.transformer import (
    DistortionEstimate,
    TransformerNLC,
    mse_loss,
    positional_encoding,
    power_scale,
    window_indices,
)

__all__ = [
    "ModelConfig", "REGION_16QAM", "region_config", "frame_block", "tile_starts",
    "periodic_blocks", "TransformerNLC", "DistortionEstimate", "mse_loss",
    "positional_encoding", "power_scale", "window_indices", "swap_polarization",
]
