"""Transmitter: pulse shaping, digital CD pre-compensation, launch power."""

from __future__ import annotations

import numpy as np

from fibernlc.channel.config import LinkConfig, TxConfig
from fibernlc.channel.filters import apply_response, dispersion_response, rrc_response, upsample
from fibernlc.channel.signals import DualPolWaveform


def shape_and_precompensate(
    symbols: np.ndarray, tx: TxConfig, link: LinkConfig
) -> DualPolWaveform:
    """RRC-shape (2, n) symbols, pre-compensate part of the link CD, set power.

    The pre-compensation removes ``tx.pre_cd_fraction`` of the total link
    dispersion.  The result has mean total power ``10**(launch_power/10)`` mW.
    """
    sps = tx.oversampling
    up = upsample(np.asarray(symbols, dtype=np.complex128), sps)
    n = up.shape[-1]
    response = rrc_response(n, sps, tx.rolloff)
    if tx.pre_cd_fraction > 0:
        response = response * dispersion_response(
            n, tx.sample_rate, link.beta2, -tx.pre_cd_fraction * link.total_length
        )
    fields = apply_response(up, response)
    fields *= np.sqrt(tx.power_mw / np.mean(np.sum(np.abs(fields) ** 2, axis=0)))
    return DualPolWaveform.from_fields(fields, tx.sample_rate)
