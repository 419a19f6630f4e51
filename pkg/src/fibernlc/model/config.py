"""Hyper-parameters of the Transformer equalizer."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from fibernlc.errors import ConfigError

EMBEDDINGS = ("cnn", "mlp1", "mlp2")


@dataclass(frozen=True)
class ModelConfig:
    """Transformer equalizer shape.

    ``key_size`` is the total query/key width across heads, so each head works
    in ``d_k = key_size // heads`` dimensions (values likewise).  ``window`` is
    the one-sided neighbour count ``w``; the output MLP sees ``2w + 1``
    encoder outputs per target.  ``rho = None`` disables the attention mask.
    """

    tap: int = 16
    block: int = 128
    d_model: int = 16
    key_size: int = 16
    heads: int = 4
    layers: int = 2
    d_ff: int = 32
    window: int = 3
    embedding: str = "cnn"
    kernel: int = 9
    d_interm: int = 16
    rho: float | None = None
    center_row: bool = False
    train_power: float = 4.0

    def __post_init__(self):
        for name in ("tap", "block", "d_model", "key_size", "heads", "layers", "d_ff"):
            value = getattr(self, name)
            if int(value) != value or value < (0 if name == "tap" else 1):
                raise ConfigError(f"{name} must be a positive integer, got {value}")
        if self.embedding not in EMBEDDINGS:
            raise ConfigError(f"embedding must be one of {EMBEDDINGS}, got {self.embedding!r}")
        if self.embedding == "cnn" and (self.kernel < 1 or self.kernel % 2 == 0):
            raise ConfigError(f"CNN kernel must be odd and >= 1, got {self.kernel}")
        if self.key_size % self.heads:
            raise ConfigError(f"key_size {self.key_size} is not divisible by heads {self.heads}")
        ell = self.ell
        if ell < 0 or ell % 2:
            raise ConfigError(f"context length l = {ell} must be even and >= 0")
        if self.window < 0 or self.window > ell // 2:
            raise ConfigError(f"window {self.window} exceeds l/2 = {ell // 2}")
        if self.rho is not None and not self.rho > 0:
            raise ConfigError(f"rho must be > 0, got {self.rho}")

    @property
    def ell(self) -> int:
        """Extra embeddings beyond the block: 2t (MLP) or 2t - k + 1 (CNN)."""
        if self.embedding == "cnn":
            return 2 * self.tap - self.kernel + 1
        return 2 * self.tap

    @property
    def d_k(self) -> int:
        return self.key_size // self.heads

    @property
    def input_length(self) -> int:
        return self.block + 2 * self.tap

    @property
    def seq_length(self) -> int:
        return self.block + self.ell

    @property
    def window_size(self) -> int:
        return 2 * self.window + 1

    @property
    def masked(self) -> bool:
        return self.rho is not None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ModelConfig:
        return cls(**data)


# Table 2 models for the 16QAM link; window is one-sided (W = 2w + 1).
REGION_16QAM = {
    1: dict(tap=96, d_model=96, key_size=64, heads=4, layers=3, d_ff=64, window=7),
    2: dict(tap=64, d_model=64, key_size=32, heads=4, layers=2, d_ff=32, window=3),
    3: dict(tap=16, d_model=16, key_size=16, heads=4, layers=2, d_ff=32, window=3),
}


def region_config(region: int, **overrides) -> ModelConfig:
    params = dict(REGION_16QAM[region], block=128, embedding="cnn", kernel=9)
    params.update(overrides)
    return ModelConfig(**params)
