"""Receiver DSP chain: matched filter, CD compensation, sampling, carrier recovery."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter1d

from fibernlc.channel.config import LinkConfig, TxConfig
from fibernlc.channel.filters import apply_response, dispersion_response, resample, rrc_response
from fibernlc.channel.signals import DualPolWaveform, SymbolFrame
from fibernlc.errors import FramingError

CR_WINDOW = 64


def carrier_recovery(rx: np.ndarray, tx_ref: np.ndarray, window: int = CR_WINDOW) -> np.ndarray:
    """Data-aided phase correction.

    The phase of a sliding (circular) average of ``conj(tx) * rx`` over
    ``window`` symbols is removed from each symbol.
    """
    corr = np.conj(tx_ref) * rx
    avg = uniform_filter1d(corr.real, window, axis=-1, mode="wrap") + 1j * uniform_filter1d(
        corr.imag, window, axis=-1, mode="wrap"
    )
    return rx * np.exp(-1j * np.angle(avg))


def to_sps(wave: DualPolWaveform, tx: TxConfig, sps: int = 2) -> DualPolWaveform:
    """Resample a waveform to ``sps`` samples per symbol."""
    current = int(round(wave.sample_rate / tx.baud))
    if current == sps:
        return wave
    fields = resample(wave.fields, sps, current)
    return DualPolWaveform.from_fields(fields, tx.baud * sps)


def rx_dsp(
    wave: DualPolWaveform,
    tx: TxConfig,
    link: LinkConfig,
    tx_ref: np.ndarray,
    cd_fraction: float | None = None,
    cr_window: int = CR_WINDOW,
) -> SymbolFrame:
    """Turn a received waveform into a normalized, phase-corrected SymbolFrame.

    ``cd_fraction`` is the fraction of the total link dispersion still to be
    removed; it defaults to ``1 - tx.pre_cd_fraction``.  After back-propagation
    the fiber dispersion is gone and only the transmitter pre-compensation
    remains, so callers pass ``-tx.pre_cd_fraction`` there.
    """
    tx_ref = np.asarray(tx_ref, dtype=np.complex128)
    sps = int(round(wave.sample_rate / tx.baud))
    if tx_ref.ndim != 2 or tx_ref.shape[0] != 2 or tx_ref.shape[1] * sps != len(wave):
        raise FramingError(
            f"waveform of {len(wave)} samples at {sps} sps does not match {tx_ref.shape} reference symbols"
        )
    if cd_fraction is None:
        cd_fraction = 1.0 - tx.pre_cd_fraction
    n = len(wave)
    response = rrc_response(n, sps, tx.rolloff)
    if cd_fraction != 0:
        response = response * dispersion_response(
            n, wave.sample_rate, link.beta2, -cd_fraction * link.total_length
        )
    fields = apply_response(wave.fields, response)
    symbols = fields[:, ::sps]
    symbols = carrier_recovery(symbols, tx_ref, cr_window)
    symbols = symbols / np.sqrt(np.mean(np.abs(symbols) ** 2, axis=1, keepdims=True))
    return SymbolFrame(symbols, tx_ref, tx.launch_power, tx.modulation)
