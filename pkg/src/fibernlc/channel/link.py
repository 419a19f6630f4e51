"""End-to-end link runs: transmitter, fiber, receiver and the DBP benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from fibernlc.channel.config import LinkConfig, TxConfig
from fibernlc.channel.fiber import dbp, propagate
from fibernlc.channel.metrics import q_factor
from fibernlc.channel.modulation import generate_symbols
from fibernlc.channel.rx import rx_dsp, to_sps
from fibernlc.channel.signals import DualPolWaveform, SymbolFrame
from fibernlc.channel.tx import shape_and_precompensate


def noise_seed(symbol_seed: int) -> int:
    """ASE seed derived from the symbol seed, distinct from it."""
    return int(np.random.SeedSequence([symbol_seed, 0xA5E]).generate_state(1)[0])


@dataclass
class LinkRun:
    symbols: np.ndarray
    received: DualPolWaveform
    frame: SymbolFrame


def simulate(tx: TxConfig, link: LinkConfig, n_symbols: int, workers: int | None = None) -> LinkRun:
    """Generate ``n_symbols`` per polarization from ``tx.seed`` and run the link."""
    symbols = generate_symbols(tx.seed, n_symbols, tx.modulation)
    launched = shape_and_precompensate(symbols, tx, link)
    received = propagate(launched, link, noise_seed(tx.seed), workers=workers)
    frame = rx_dsp(received, tx, link, symbols)
    return LinkRun(symbols, received, frame)


def dbp_frame(
    run: LinkRun,
    tx: TxConfig,
    link: LinkConfig,
    steps_per_span: int,
    xi: float,
    workers: int | None = None,
) -> SymbolFrame:
    """Back-propagate the received waveform at 2 sps and finish the Rx chain."""
    wave = to_sps(run.received, tx, 2)
    wave = dbp(wave, link, steps_per_span, xi, workers=workers)
    return rx_dsp(wave, tx, link, run.symbols, cd_fraction=-tx.pre_cd_fraction)


def optimize_dbp(
    run: LinkRun,
    tx: TxConfig,
    link: LinkConfig,
    steps_per_span: int,
    bounds: tuple[float, float] = (0.0, 1.5),
    xatol: float = 0.01,
) -> tuple[float, float]:
    """Scalar search of the DBP nonlinear scale; returns (xi, Q dB)."""
    cache: dict[float, float] = {}

    def neg_q(xi):
        cache[xi] = q_factor(dbp_frame(run, tx, link, steps_per_span, xi))
        return -cache[xi]

    minimize_scalar(neg_q, bounds=bounds, method="bounded", options={"xatol": xatol})
    # Q is piecewise constant in xi (bit-error counts), so keep the best point seen
    best = max(cache, key=cache.get)
    return float(best), cache[best]
