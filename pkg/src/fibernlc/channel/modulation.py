"""Gray-mapped square QAM: symbol generation and hard-decision demapping."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from fibernlc.channel.config import MODULATION_ORDER
from fibernlc.errors import ConfigError


def _order(modulation: str) -> int:
    try:
        return MODULATION_ORDER[modulation]
    except KeyError:
        raise ConfigError(
            f"unsupported modulation {modulation!r}; expected one of {sorted(MODULATION_ORDER)}"
        ) from None


@lru_cache(maxsize=None)
def _pam(side: int) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude levels and their Gray labels for one quadrature."""
    levels = 2.0 * np.arange(side) - (side - 1)
    gray = np.arange(side) ^ (np.arange(side) >> 1)
    return levels, gray


def constellation(modulation: str) -> tuple[np.ndarray, np.ndarray]:
    """Return (points, labels) with unit average energy.

    ``labels[i]`` is the integer bit label of ``points[i]``; the upper half of
    the label bits drive the in-phase rail.
    """
    order = _order(modulation)
    side = int(round(np.sqrt(order)))
    half = int(np.log2(side))
    levels, gray = _pam(side)
    ii, qq = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    points = (levels[ii] + 1j * levels[qq]).ravel()
    labels = ((gray[ii] << half) | gray[qq]).ravel()
    points = points / np.sqrt(2 * (order - 1) / 3)
    return points, labels


def bits_per_symbol(modulation: str) -> int:
    return int(np.log2(_order(modulation)))


def generate_symbols(seed: int, n: int, modulation: str = "QAM16") -> np.ndarray:
    """Draw i.i.d. uniform symbols for both polarizations.

    Uses numpy's PCG64 generator seeded with ``seed``.  Returns a (2, n)
    complex array.  Each polarization is scaled to exactly unit mean energy
    over the drawn sequence, so the reference matches a receiver normalized to
    unit power; the scale differs from 1 by O(1/sqrt(n)) and leaves hard
    decisions unchanged.
    """
    if n < 1:
        raise ConfigError(f"symbol count must be >= 1, got {n}")
    points, _ = constellation(modulation)
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, points.size, size=(2, n))
    symbols = points[idx]
    return symbols / np.sqrt(np.mean(np.abs(symbols) ** 2, axis=1, keepdims=True))


def hard_decision(symbols: np.ndarray, modulation: str) -> np.ndarray:
    """Integer bit labels of the nearest constellation points.

    Square QAM decisions separate per rail, so each quadrature is sliced
    independently against the PAM levels.
    """
    order = _order(modulation)
    side = int(round(np.sqrt(order)))
    half = int(np.log2(side))
    _, gray = _pam(side)
    scale = np.sqrt(2 * (order - 1) / 3)

    def slice_rail(v):
        idx = np.rint((v * scale + (side - 1)) / 2).astype(np.int64)
        return gray[np.clip(idx, 0, side - 1)]

    return (slice_rail(symbols.real) << half) | slice_rail(symbols.imag)


def count_bit_errors(rx: np.ndarray, tx: np.ndarray, modulation: str) -> int:
    diff = hard_decision(rx, modulation) ^ hard_decision(tx, modulation)
    return int(np.unpackbits(diff.astype(">u8").view(np.uint8)).sum())
