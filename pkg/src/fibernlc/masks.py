"""Perturbation-inspired attention masks.

A query at offset ``m`` from the target symbol may attend to a key at offset
``n`` when ``|n| <= min(rho * ceil(l/2) / |m|, ceil(l/2))``, the hyperbolic
support of first-order perturbation coefficients.  Masks are additive:
0 where attention is allowed, -inf elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fibernlc.errors import ConfigError

# slack for rho * ceil(l/2) landing a hair below an integer in binary floating point
_TOL = 1e-9


@dataclass(frozen=True)
class AttentionMask:
    matrix: np.ndarray
    rho: float
    ell: int
    block: int

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def allowed(self) -> np.ndarray:
        """Boolean matrix, True where the mask entry is 0."""
        return self.matrix == 0

    def zero_count(self) -> int:
        return int(np.count_nonzero(self.allowed))

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """(rows, cols) of the unmasked entries in row-major order."""
        rows, cols = np.nonzero(self.allowed)
        return rows, cols

    def save_pgm(self, path: str | Path) -> None:
        """Binary greymap: white (255) = unmasked, black (0) = masked."""
        img = np.where(self.allowed, 255, 0).astype(np.uint8)
        header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
        Path(path).write_bytes(header + img.tobytes())

    def save_row_lists(self, path: str | Path) -> None:
        """One line per row: ``row: col col ...`` with 0-based indices."""
        lines = [
            f"{i}: " + " ".join(str(j) for j in np.flatnonzero(row))
            for i, row in enumerate(self.allowed)
        ]
        Path(path).write_text("\n".join(lines) + "\n")


def _check(ell: int, rho: float) -> None:
    if int(ell) != ell or ell < 0 or ell % 2:
        raise ConfigError(f"mask context length must be a non-negative even integer, got {ell}")
    if not rho > 0:
        raise ConfigError(f"rho must be > 0, got {rho}")


def individual_allowed(ell: int, rho: float, center_row: bool = False) -> np.ndarray:
    """Boolean (ell+1, ell+1) support of the single-target mask.

    The target's own row (m = 0) is excluded unless ``center_row`` is set,
    in which case it is unmasked out to ``ceil(ell/2)`` like the limit of the
    selection rule as |m| -> 0.
    """
    _check(ell, rho)
    half = ell // 2
    cap = math.ceil(ell / 2)
    offsets = np.arange(-half, half + 1)
    m = np.abs(offsets)[:, None]
    n = np.abs(offsets)[None, :]
    allowed = (m * n <= rho * cap + _TOL) & (n <= cap) & (m != 0)
    if center_row:
        allowed[half, :] = True
    return allowed


def individual_mask(ell: int, rho: float, center_row: bool = False) -> AttentionMask:
    """Mask for a single target symbol with ``ell`` context embeddings."""
    allowed = individual_allowed(ell, rho, center_row)
    return AttentionMask(np.where(allowed, 0.0, -np.inf), float(rho), int(ell), 1)


def block_mask(ell: int, rho: float, block: int, center_row: bool = False) -> AttentionMask:
    """Union of ``block`` single-target masks placed along the diagonal.

    Placement ``i`` covers rows and columns ``i .. i + ell`` of the
    (ell + block) square matrix.
    """
    if int(block) != block or block < 1:
        raise ConfigError(f"block size must be an integer >= 1, got {block}")
    indiv = individual_allowed(ell, rho, center_row)
    size = ell + block
    allowed = np.zeros((size, size), dtype=bool)
    for i in range(block):
        allowed[i : i + ell + 1, i : i + ell + 1] |= indiv
    return AttentionMask(np.where(allowed, 0.0, -np.inf), float(rho), int(ell), int(block))


def zero_ratio(mask: AttentionMask | np.ndarray) -> float:
    """Fraction of entries that are 0 (unmasked)."""
    matrix = mask.matrix if isinstance(mask, AttentionMask) else np.asarray(mask)
    return float(np.count_nonzero(matrix == 0) / matrix.size)
