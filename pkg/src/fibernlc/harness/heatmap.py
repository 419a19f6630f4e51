"""Batch-averaged attention-score magnitudes per layer and head."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from fibernlc.model.transformer import TransformerNLC


def score_maps(model: TransformerNLC, blocks: np.ndarray, chunk: int = 32) -> np.ndarray:
    """(layers, heads, N, N) mean of |q k^T / sqrt(d_k)| over ``blocks``.

    Masked coordinates are set to 0, the floor of the magnitude scale.
    """
    c = model.config
    n = c.seq_length
    total = np.zeros((c.layers, c.heads, n, n))
    for i in range(0, len(blocks), chunk):
        _, cache = model.forward(blocks[i : i + chunk], keep_scores=True)
        for layer, scores in enumerate(cache["scores"]):
            total[layer] += np.abs(scores).sum(axis=0)
    maps = total / len(blocks)
    if model.mask is not None:
        maps[..., ~model.mask.allowed] = 0.0
    return maps


def band_fraction(matrix: np.ndarray, half_width: int) -> float:
    """Share of the total mass lying within ``half_width`` of the main diagonal."""
    n = matrix.shape[-1]
    i = np.arange(n)
    band = np.abs(i[:, None] - i[None, :]) <= half_width
    total = matrix.sum()
    return float(matrix[band].sum() / total) if total > 0 else 0.0


def _write_pgm(path: Path, matrix: np.ndarray) -> None:
    peak = matrix.max()
    scaled = matrix / peak if peak > 0 else matrix
    img = np.round(255 * scaled).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + img.tobytes())


def export_heatmaps(model: TransformerNLC, blocks: np.ndarray, out_dir: str | Path) -> dict:
    """Write ``layer{L}_head{H}.pgm`` / ``.csv`` per map and ``band.csv``.

    Returns ``{(layer, head): matrix}``.  Greymaps are scaled so that the
    largest entry of each map is white.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    maps = score_maps(model, blocks)
    half = model.config.ell // 2
    lines = ["layer,head,band_fraction"]
    result = {}
    for layer in range(maps.shape[0]):
        for head in range(maps.shape[1]):
            m = maps[layer, head]
            stem = f"layer{layer}_head{head}"
            _write_pgm(out / f"{stem}.pgm", m)
            np.savetxt(out / f"{stem}.csv", m, delimiter=",", fmt="%.8g")
            lines.append(f"{layer},{head},{band_fraction(m, half):.6f}")
            result[(layer, head)] = m
    (out / "band.csv").write_text("\n".join(lines) + "\n")
    return result
