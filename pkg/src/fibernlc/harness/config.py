"""Training and grid-search settings."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field, fields

from fibernlc.errors import ConfigError
from fibernlc.model.config import ModelConfig


@dataclass(frozen=True)
class TrainConfig:
    """Training protocol.

    ``minibatch`` counts target symbols; one optimizer step sees
    ``ceil(minibatch / b)`` blocks.  ``lr_scale`` multiplies the warm-up
    schedule.  With ``both_polarizations`` the Y polarization (swapped into
    the X slot) is added to the training blocks.
    """

    train_symbols: int = 2**19
    eval_symbols: int = 2**18
    minibatch: int = 512
    max_epochs: int = 1000
    patience: int = 100
    seed_train: int = 1
    seed_eval: int = 2
    warmup_steps: int = 4000
    lr_scale: float = 1.0
    val_fraction: float = 0.1
    init_seed: int = 0
    both_polarizations: bool = False

    def __post_init__(self):
        if self.seed_train == self.seed_eval:
            raise ConfigError(f"train and eval seeds must differ (both {self.seed_train})")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.max_epochs < 1 or self.minibatch < 1 or self.warmup_steps < 1:
            raise ConfigError("max_epochs, minibatch and warmup_steps must be >= 1")
        if not 0 < self.val_fraction < 1:
            raise ConfigError(f"val_fraction must lie in (0, 1), got {self.val_fraction}")
        if self.train_symbols < 1 or self.eval_symbols < 1:
            raise ConfigError("symbol counts must be >= 1")
        if not self.lr_scale > 0:
            raise ConfigError(f"lr_scale must be > 0, got {self.lr_scale}")

    def blocks_per_step(self, block: int) -> int:
        return -(-self.minibatch // block)

    def to_dict(self) -> dict:
        return asdict(self)


# Reduced protocol for single-CPU runs: 8 spans and 2^15 / 2^14 symbols.
# The small frame is stretched by training on both polarizations, and the
# short warm-up needs a raised peak rate to converge within 200 epochs.
DESK_TRAIN = TrainConfig(
    train_symbols=2**15,
    eval_symbols=2**14,
    max_epochs=200,
    patience=40,
    warmup_steps=500,
    lr_scale=3.0,
    both_polarizations=True,
)


@dataclass(frozen=True)
class GridSpec:
    """Value lists per hyper-parameter; the grid is their Cartesian product.

    ``rho`` entries of ``None`` produce unmasked models.
    """

    tap: tuple = (16,)
    block: tuple = (128,)
    d_model: tuple = (16,)
    key_size: tuple = (16,)
    heads: tuple = (4,)
    layers: tuple = (2,)
    d_ff: tuple = (32,)
    window: tuple = (3,)
    embedding: tuple = ("cnn",)
    kernel: tuple = (9,)
    rho: tuple = (None,)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for f in fields(self):
            if f.name == "extra":
                continue
            values = getattr(self, f.name)
            if isinstance(values, (str, int, float)) or values is None:
                values = (values,)
            values = tuple(values)
            if not values:
                raise ConfigError(f"grid list {f.name!r} is empty")
            object.__setattr__(self, f.name, values)

    def axes(self) -> dict[str, tuple]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "extra"}

    def configs(self) -> list[dict]:
        """Every combination as a ModelConfig keyword dict (not yet validated)."""
        axes = self.axes()
        names = list(axes)
        return [dict(zip(names, combo), **self.extra) for combo in itertools.product(*axes.values())]

    def model_configs(self) -> list[tuple[dict, ModelConfig | ConfigError]]:
        out = []
        for params in self.configs():
            try:
                out.append((params, ModelConfig(**params)))
            except ConfigError as err:
                out.append((params, err))
        return out
