"""Coherent dual-polarization link simulation and the DBP benchmark."""

from fibernlc.channel.config import LinkConfig, TxConfig
from fibernlc.channel.fiber import dbp, propagate
from fibernlc.channel.link import LinkRun, dbp_frame, optimize_dbp, simulate
from fibernlc.channel.metrics import Q_SENTINEL_DB, ber, evm, evm_db, q_factor, q_from_ber
from fibernlc.channel.modulation import constellation, generate_symbols
from fibernlc.channel.rx import carrier_recovery, rx_dsp, to_sps
from fibernlc.channel.signals import (
    DualPolWaveform,
    SymbolFrame,
    load_waveform,
    save_waveform,
    swap_polarization,
)
from fibernlc.channel.tx import shape_and_precompensate

__all__ = [
    "LinkConfig", "TxConfig", "DualPolWaveform", "SymbolFrame", "LinkRun",
    "generate_symbols", "constellation", "shape_and_precompensate", "propagate",
    "rx_dsp", "carrier_recovery", "to_sps", "dbp", "dbp_frame", "optimize_dbp",
    "simulate", "q_factor", "q_from_ber", "ber", "evm", "evm_db", "Q_SENTINEL_DB",
    "save_waveform", "load_waveform", "swap_polarization",
]
