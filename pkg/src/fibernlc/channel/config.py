"""Link and transmitter parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass

from fibernlc.errors import ConfigError

MODULATION_ORDER = {"QAM16": 16, "QAM64": 64}

SPEED_OF_LIGHT = 299_792_458.0  # m/s
PLANCK = 6.626_070_15e-34  # J s


@dataclass(frozen=True)
class LinkConfig:
    """Multi-span SSMF link with lumped amplification.

    Defaults are standard SSMF values.  ``max_nl_phase`` bounds the nonlinear
    phase rotation per SSFM step, in degrees.
    """

    span_count: int = 8
    span_length: float = 80.0  # km
    attenuation: float = 0.2  # dB/km
    dispersion: float = 17.0  # ps/(nm km)
    gamma: float = 1.3  # 1/(W km)
    noise_figure: float = 6.0  # dB
    center_wavelength: float = 1550.0  # nm
    max_nl_phase: float = 0.05  # degrees
    ase: bool = True

    def __post_init__(self):
        if int(self.span_count) != self.span_count or self.span_count < 1:
            raise ConfigError(f"span_count must be an integer >= 1, got {self.span_count}")
        if not self.span_length > 0:
            raise ConfigError(f"span_length must be > 0, got {self.span_length}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if not self.max_nl_phase > 0:
            raise ConfigError(f"max_nl_phase must be > 0, got {self.max_nl_phase}")
        if self.attenuation < 0:
            raise ConfigError(f"attenuation must be >= 0, got {self.attenuation}")
        if not self.center_wavelength > 0:
            raise ConfigError("center_wavelength must be > 0")

    @property
    def alpha(self) -> float:
        """Power attenuation in 1/km (natural units)."""
        return self.attenuation * math.log(10) / 10

    @property
    def beta2(self) -> float:
        """Group-velocity dispersion in s^2/km."""
        lam = self.center_wavelength * 1e-9
        d_si = self.dispersion * 1e-6  # s/m^2
        return -d_si * lam**2 / (2 * math.pi * SPEED_OF_LIGHT) * 1e3

    @property
    def gamma_mw(self) -> float:
        """Nonlinear coefficient in 1/(mW km), matching fields in sqrt(mW)."""
        return self.gamma * 1e-3

    @property
    def total_length(self) -> float:
        return self.span_count * self.span_length

    @property
    def span_gain(self) -> float:
        """Linear power gain that exactly restores one span's loss."""
        return math.exp(self.alpha * self.span_length)

    @property
    def carrier_frequency(self) -> float:
        return SPEED_OF_LIGHT / (self.center_wavelength * 1e-9)


@dataclass(frozen=True)
class TxConfig:
    baud: float = 32.0  # GBaud
    modulation: str = "QAM16"
    rolloff: float = 1 / 16
    oversampling: int = 2
    launch_power: float = 4.0  # dBm, both polarizations together
    pre_cd_fraction: float = 0.5
    seed: int = 1

    def __post_init__(self):
        if self.modulation not in MODULATION_ORDER:
            raise ConfigError(
                f"unsupported modulation {self.modulation!r}; expected one of {sorted(MODULATION_ORDER)}"
            )
        if int(self.oversampling) != self.oversampling or self.oversampling < 2:
            raise ConfigError(f"oversampling must be an integer >= 2, got {self.oversampling}")
        if not 0 <= self.rolloff <= 1:
            raise ConfigError(f"rolloff must lie in [0, 1], got {self.rolloff}")
        if not 0 <= self.pre_cd_fraction <= 1:
            raise ConfigError(f"pre_cd_fraction must lie in [0, 1], got {self.pre_cd_fraction}")
        if not self.baud > 0:
            raise ConfigError("baud must be > 0")

    @property
    def sample_rate(self) -> float:
        """Simulation sample rate in GHz."""
        return self.baud * self.oversampling

    @property
    def power_mw(self) -> float:
        return 10 ** (self.launch_power / 10)
