"""Signal-quality metrics: EVM, BER and Q-factor."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import log_ndtr, ndtri, ndtri_exp

from fibernlc.channel.config import MODULATION_ORDER
from fibernlc.channel.modulation import bits_per_symbol, count_bit_errors
from fibernlc.channel.signals import SymbolFrame
from fibernlc.errors import FramingError

# Q for BER >= 0.5, where the Gaussian relation has no positive solution.
Q_SENTINEL_DB = float("-inf")


def q_from_ber(ber: float) -> float:
    """Q in dB from BER via Q = sqrt(2) * erfcinv(2 BER)."""
    if not ber < 0.5:
        return Q_SENTINEL_DB
    return 20 * math.log10(-float(ndtri(ber)))


def q_from_snr(snr: float, modulation: str) -> float:
    """Q in dB implied by Gaussian noise at ``snr`` for square Gray QAM.

    Uses the nearest-neighbour BER approximation evaluated in the log domain,
    so very high SNRs do not underflow.
    """
    order = MODULATION_ORDER[modulation]
    coeff = 4 * (1 - 1 / math.sqrt(order)) / math.log2(order)
    log_ber = math.log(coeff) + float(log_ndtr(-math.sqrt(3 * snr / (order - 1))))
    q = -float(ndtri_exp(min(log_ber, math.log(0.5))))
    if q <= 0:
        return Q_SENTINEL_DB
    return 20 * math.log10(q)


def _select(frame: SymbolFrame, pol: int | None):
    if len(frame) == 0:
        raise FramingError("empty symbol frame")
    if pol is None:
        return frame.rx, frame.tx_ref
    return frame.rx[pol], frame.tx_ref[pol]


def evm(frame: SymbolFrame, pol: int | None = None) -> float:
    """RMS error vector magnitude, linear.

    The receiver normalizes each polarization to unit power, so the reference
    is scaled the same way first; otherwise the finite-sequence power of the
    reference (e.g. 1.03 for 2^11 random 16QAM symbols) would show up as error.
    """
    rx, tx = _select(frame, pol)
    tx = tx / np.sqrt(np.mean(np.abs(tx) ** 2, axis=-1, keepdims=True))
    return math.sqrt(np.mean(np.abs(rx - tx) ** 2))


def evm_db(frame: SymbolFrame, pol: int | None = None) -> float:
    e = evm(frame, pol)
    return 20 * math.log10(e) if e > 0 else float("-inf")


def ber(frame: SymbolFrame, pol: int | None = None) -> tuple[float, int]:
    """Hard-decision bit error rate and the raw error count."""
    rx, tx = _select(frame, pol)
    errors = count_bit_errors(rx, tx, frame.modulation)
    return errors / (tx.size * bits_per_symbol(frame.modulation)), errors


def q_factor(frame: SymbolFrame, pol: int | None = None) -> float:
    """Q-factor in dB from hard-decision BER.

    ``pol`` selects 0 (X) or 1 (Y); ``None`` pools both.  When the frame has
    no bit errors, the Q implied by the measured EVM under Gaussian noise is
    returned instead (EVM is floored at -300 dB to stay finite).
    """
    rate, errors = ber(frame, pol)
    if errors == 0:
        return q_from_snr(1.0 / max(evm(frame, pol) ** 2, 1e-30), frame.modulation)
    return q_from_ber(rate)
