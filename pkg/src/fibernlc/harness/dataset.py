"""Training samples cut from symbol frames."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fibernlc.channel.signals import SymbolFrame, swap_polarization
from fibernlc.errors import FramingError
from fibernlc.model.config import ModelConfig
from fibernlc.model.framing import tile_starts


@dataclass
class Dataset:
    """``inputs`` (B, b + 2t, 4) blocks and ``targets`` (B, b, 2) X distortions."""

    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def subset(self, index) -> Dataset:
        return Dataset(self.inputs[index], self.targets[index])

    def concat(self, other: Dataset) -> Dataset:
        return Dataset(
            np.concatenate([self.inputs, other.inputs]), np.concatenate([self.targets, other.targets])
        )


def distortion_targets(frame: SymbolFrame) -> np.ndarray:
    """(n, 2) residual distortion of the X polarization: rx - tx, real and imaginary."""
    err = frame.rx[0] - frame.tx_ref[0]
    return np.stack([err.real, err.imag], axis=1)


def build_dataset(frame: SymbolFrame, config: ModelConfig) -> Dataset:
    """Non-overlapping target blocks tiling the frame in order.

    Raises FramingError when the frame holds fewer than b + 2t symbols.
    """
    t, b = config.tap, config.block
    starts = tile_starts(len(frame), config)
    comps = frame.components
    errs = distortion_targets(frame)
    idx = starts[:, None] + np.arange(-t, b + t)[None, :]
    tgt = starts[:, None] + np.arange(b)[None, :]
    return Dataset(comps[idx], errs[tgt])


def split(dataset: Dataset, val_fraction: float = 0.1) -> tuple[Dataset, Dataset]:
    """Leading blocks for training, the trailing ``val_fraction`` for validation."""
    n = len(dataset)
    if n < 2:
        raise FramingError(f"need at least 2 blocks to hold out validation data, got {n}")
    n_val = max(1, int(round(n * val_fraction)))
    if n_val >= n:
        n_val = n - 1
    return dataset.subset(slice(0, n - n_val)), dataset.subset(slice(n - n_val, n))


def training_split(
    frame: SymbolFrame, config: ModelConfig, val_fraction: float = 0.1, both_polarizations: bool = False
) -> tuple[Dataset, Dataset]:
    """Train/validation sets from one frame, split per polarization before merging."""
    train, val = split(build_dataset(frame, config), val_fraction)
    if both_polarizations:
        ytrain, yval = split(build_dataset(swap_polarization(frame), config), val_fraction)
        train, val = train.concat(ytrain), val.concat(yval)
    return train, val
