"""Frequency-domain filters shared by the transmitter, fiber and receiver.

All filtering is circular: the simulated sequences are treated as periodic,
which is what the FFT-based fiber model assumes anyway.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as sfft


def angular_frequency(n: int, sample_rate_ghz: float) -> np.ndarray:
    """Angular frequency grid (rad/s) in FFT order."""
    return 2 * np.pi * sfft.fftfreq(n, d=1.0 / (sample_rate_ghz * 1e9))


def dispersion_response(
    n: int, sample_rate_ghz: float, beta2: float, length: float
) -> np.ndarray:
    """Transfer function of ``length`` km of pure GVD (beta2 in s^2/km).

    With numpy's FFT sign convention the linear part of the propagation
    equation integrates to ``exp(+j beta2/2 w^2 z)``.
    """
    w = angular_frequency(n, sample_rate_ghz)
    return np.exp(0.5j * beta2 * w**2 * length)


def rrc_response(n: int, sps: int, rolloff: float) -> np.ndarray:
    """Root-raised-cosine amplitude response sampled on the FFT grid.

    Frequencies are normalized to the symbol rate; the response is 1 in the
    passband, so a pair of these gives a Nyquist raised cosine.
    """
    f = np.abs(sfft.fftfreq(n, d=1.0 / sps))
    lo, hi = (1 - rolloff) / 2, (1 + rolloff) / 2
    h = np.zeros(n)
    h[f <= lo] = 1.0
    if rolloff > 0:
        band = (f > lo) & (f <= hi)
        h[band] = np.sqrt(0.5 * (1 + np.cos(np.pi / rolloff * (f[band] - lo))))
    return h


def apply_response(fields: np.ndarray, response: np.ndarray, workers: int | None = None) -> np.ndarray:
    """Filter each row of ``fields`` by ``response`` (FFT order)."""
    return sfft.ifft(sfft.fft(fields, axis=-1, workers=workers) * response, axis=-1, workers=workers)


def upsample(symbols: np.ndarray, sps: int) -> np.ndarray:
    out = np.zeros(symbols.shape[:-1] + (symbols.shape[-1] * sps,), dtype=np.complex128)
    out[..., ::sps] = symbols
    return out


def resample(fields: np.ndarray, factor_num: int, factor_den: int) -> np.ndarray:
    """Band-limited resampling by ``factor_num / factor_den`` via the spectrum.

    The spectrum is zero-padded or truncated around DC; amplitudes are
    preserved (not energies).
    """
    n = fields.shape[-1]
    if (n * factor_num) % factor_den:
        raise ValueError("resampled length must be an integer")
    m = n * factor_num // factor_den
    spec = sfft.fftshift(sfft.fft(fields, axis=-1), axes=-1)
    out = np.zeros(fields.shape[:-1] + (m,), dtype=np.complex128)
    c_in, c_out = n // 2, m // 2
    half = min(n, m) // 2
    out[..., c_out - half : c_out + half] = spec[..., c_in - half : c_in + half]
    return sfft.ifft(sfft.ifftshift(out, axes=-1), axis=-1) * (m / n)
