"""Waveform and symbol-frame containers plus their on-disk formats."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from fibernlc.errors import ConfigError, FramingError

WAVEFORM_MAGIC = "FNLCWAVE 1"


@dataclass
class DualPolWaveform:
    """Complex optical field of both polarizations, in sqrt(mW).

    ``sample_rate`` is in GHz.
    """

    x_pol: np.ndarray
    y_pol: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.x_pol = np.asarray(self.x_pol, dtype=np.complex128)
        self.y_pol = np.asarray(self.y_pol, dtype=np.complex128)
        if self.x_pol.shape != self.y_pol.shape or self.x_pol.ndim != 1:
            raise FramingError(
                f"polarization arrays must be 1-D and equal length, got {self.x_pol.shape} and {self.y_pol.shape}"
            )

    @property
    def fields(self) -> np.ndarray:
        """Stacked (2, n) view of both polarizations."""
        return np.stack([self.x_pol, self.y_pol])

    @classmethod
    def from_fields(cls, fields: np.ndarray, sample_rate: float) -> DualPolWaveform:
        return cls(fields[0], fields[1], sample_rate)

    def __len__(self) -> int:
        return self.x_pol.size

    def power(self) -> float:
        """Mean total power over both polarizations (mW)."""
        return float(np.mean(np.abs(self.x_pol) ** 2 + np.abs(self.y_pol) ** 2))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x_pol)) and np.all(np.isfinite(self.y_pol)))


def save_waveform(wave: DualPolWaveform, path: str | Path) -> None:
    """Write a text header followed by little-endian interleaved float64 I/Q.

    The x polarization is stored first, then y.
    """
    header = (
        f"{WAVEFORM_MAGIC}\n"
        f"sample_rate {wave.sample_rate!r}\n"
        f"length {len(wave)}\n"
        "polarizations 2\n"
        "end\n"
    )
    body = np.empty((2, len(wave), 2), dtype="<f8")
    body[0, :, 0], body[0, :, 1] = wave.x_pol.real, wave.x_pol.imag
    body[1, :, 0], body[1, :, 1] = wave.y_pol.real, wave.y_pol.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(body.tobytes())


def load_waveform(path: str | Path) -> DualPolWaveform:
    with open(path, "rb") as fh:
        if fh.readline().decode("ascii").strip() != WAVEFORM_MAGIC:
            raise ConfigError(f"{path}: not a waveform file")
        meta = {}
        while True:
            line = fh.readline().decode("ascii").strip()
            if line == "end":
                break
            if not line:
                raise ConfigError(f"{path}: truncated header")
            key, value = line.split(maxsplit=1)
            meta[key] = value
        raw = np.frombuffer(fh.read(), dtype="<f8")
    n, npol = int(meta["length"]), int(meta["polarizations"])
    if raw.size != n * npol * 2:
        raise ConfigError(f"{path}: expected {n * npol * 2} floats, found {raw.size}")
    iq = raw.reshape(npol, n, 2)
    fields = iq[..., 0] + 1j * iq[..., 1]
    return DualPolWaveform(fields[0], fields[1], float(meta["sample_rate"]))


@dataclass
class SymbolFrame:
    """Received symbols after the linear DSP chain, aligned with what was sent.

    ``rx`` and ``tx_ref`` are (2, n) complex arrays, row 0 = X and row 1 = Y.
    The four real components X_I, X_Q, Y_I, Y_Q are exposed by
    :attr:`components`.
    """

    rx: np.ndarray
    tx_ref: np.ndarray
    launch_power: float
    modulation: str = "QAM16"

    def __post_init__(self):
        self.rx = np.asarray(self.rx, dtype=np.complex128)
        self.tx_ref = np.asarray(self.tx_ref, dtype=np.complex128)
        if self.rx.ndim != 2 or self.rx.shape[0] != 2 or self.rx.shape != self.tx_ref.shape:
            raise FramingError(
                f"rx and tx_ref must both be (2, n); got {self.rx.shape} and {self.tx_ref.shape}"
            )

    def __len__(self) -> int:
        return self.rx.shape[1]

    @property
    def components(self) -> np.ndarray:
        """(n, 4) real array of X_I, X_Q, Y_I, Y_Q."""
        return np.stack(
            [self.rx[0].real, self.rx[0].imag, self.rx[1].real, self.rx[1].imag], axis=1
        )

    def with_rx(self, rx: np.ndarray) -> SymbolFrame:
        return replace(self, rx=np.asarray(rx, dtype=np.complex128))

    def save(self, path: str | Path) -> None:
        np.savez(
            path,
            rx=self.rx,
            tx_ref=self.tx_ref,
            launch_power=np.float64(self.launch_power),
            modulation=np.str_(self.modulation),
        )

    @classmethod
    def load(cls, path: str | Path) -> SymbolFrame:
        with np.load(path) as data:
            return cls(
                data["rx"], data["tx_ref"], float(data["launch_power"]), str(data["modulation"])
            )


def swap_polarization(frame: SymbolFrame) -> SymbolFrame:
    """Exchange X and Y in both the received and the reference symbols."""
    return replace(frame, rx=frame.rx[::-1].copy(), tx_ref=frame.tx_ref[::-1].copy())
