"""TOML run configuration with strict schema checking.

Sections and their keys::

    [run]    out_dir (required unless --out is given), checkpoint, save_waveform,
             workers, heatmap_blocks
    [link]   LinkConfig fields
    [tx]     TxConfig fields except seed (symbol seeds live in [train])
    [model]  ModelConfig fields, or region = 1 | 2 | 3 plus overrides
    [train]  TrainConfig fields
    [grid]   GridSpec fields, each a list ("none" in rho = unmasked)
    [mask]   ell, rho, block, center_row
    [sweep]  powers (list, dBm), dbp_steps
    [dbp]    steps_per_span (list), xi_min, xi_max
    [rmps]   blocks (list)

Unknown sections or keys, wrong value types and missing required keys raise
ConfigError naming the offending path, e.g. ``model.hidden``.
"""

from __future__ import annotations

import sys
from dataclasses import MISSING, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from fibernlc.channel.config import LinkConfig, TxConfig
from fibernlc.errors import ConfigError
from fibernlc.harness.config import DESK_TRAIN, GridSpec, TrainConfig
from fibernlc.model.config import REGION_16QAM, ModelConfig, region_config


@dataclass(frozen=True)
class RunSection:
    out_dir: str | None = None
    checkpoint: str | None = None
    save_waveform: bool = False
    workers: int = 1
    heatmap_blocks: int = 32


@dataclass(frozen=True)
class MaskSection:
    ell: int = 120
    rho: float = 2.6
    block: int = 1
    center_row: bool = False


@dataclass(frozen=True)
class SweepSection:
    powers: tuple = (-2.0, 0.0, 2.0, 4.0, 6.0)
    dbp_steps: int | None = None


@dataclass(frozen=True)
class DbpSection:
    steps_per_span: tuple = (1, 2, 3)
    xi_min: float = 0.0
    xi_max: float = 1.5


@dataclass(frozen=True)
class RmpsSection:
    blocks: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    link: LinkConfig = field(default_factory=LinkConfig)
    tx: TxConfig = field(default_factory=TxConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    mask: MaskSection = field(default_factory=MaskSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    dbp: DbpSection = field(default_factory=DbpSection)
    rmps: RmpsSection = field(default_factory=RmpsSection)

    @property
    def out_dir(self) -> Path:
        return Path(self.run.out_dir)


SECTIONS = {f.name: f for f in fields(RunConfig)}
_SECTION_TYPES = {
    "run": RunSection, "link": LinkConfig, "tx": TxConfig, "model": ModelConfig,
    "train": TrainConfig, "grid": GridSpec, "mask": MaskSection, "sweep": SweepSection,
    "dbp": DbpSection, "rmps": RmpsSection,
}
_EXCLUDED = {("tx", "seed"), ("grid", "extra")}
# keys whose default is None but which take a number when given
_OPTIONAL_NUMBERS = {("model", "rho"), ("sweep", "dbp_steps")}


def _allowed(section: str) -> dict[str, object]:
    cls = _SECTION_TYPES[section]
    out = {}
    for f in fields(cls):
        if (section, f.name) in _EXCLUDED:
            continue
        if f.default is not MISSING:
            out[f.name] = f.default
        elif f.default_factory is not MISSING:
            out[f.name] = f.default_factory()
    return out


def _check_scalar(path: str, value, default):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
        kind = "a boolean"
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
        kind = "an integer"
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        kind = "a number"
        value = float(value) if ok else value
    elif isinstance(default, str):
        ok = isinstance(value, str)
        kind = "a string"
    else:
        ok, kind = True, ""
    if not ok:
        raise ConfigError(f"{path}: expected {kind}, got {value!r}")
    return value


def _coerce(section: str, key: str, value, default):
    path = f"{section}.{key}"
    if isinstance(default, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        if (section, key) == ("grid", "rho"):
            # TOML has no null: the string "none" stands for an unmasked model
            return tuple(None if v == "none" else _check_scalar(f"{path}[{i}]", v, 0.0) for i, v in enumerate(value))
        sample = default[0] if default else None
        if sample is None:
            return tuple(value)
        return tuple(_check_scalar(f"{path}[{i}]", v, sample) for i, v in enumerate(value))
    if default is None:
        if (section, key) in _OPTIONAL_NUMBERS:
            return _check_scalar(path, value, 0.0 if key == "rho" else 0)
        return _check_scalar(path, value, "")
    return _check_scalar(path, value, default)


def _section_kwargs(section: str, table) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"{section}: expected a table")
    allowed = _allowed(section)
    if section == "model":
        allowed = dict(allowed, region=0)
    kwargs = {}
    for key, value in table.items():
        if key not in allowed:
            hint = " (symbol seeds are train.seed_train / train.seed_eval)" if (section, key) == ("tx", "seed") else ""
            raise ConfigError(f"{section}.{key}: unknown key{hint}")
        kwargs[key] = _coerce(section, key, value, allowed[key])
    return kwargs


def parse_run_config(
    data: dict,
    desk_scale: bool = False,
    out_override: str | None = None,
    seed_override: int | None = None,
    require_out: bool = True,
) -> RunConfig:
    """Validate a parsed TOML document and build the RunConfig."""
    for name in data:
        if name not in SECTIONS:
            raise ConfigError(f"{name}: unknown section (expected one of {sorted(SECTIONS)})")
    tables = {name: _section_kwargs(name, data.get(name, {})) for name in SECTIONS}

    train_base = DESK_TRAIN if desk_scale else TrainConfig()
    link_base = replace(LinkConfig(), span_count=8) if desk_scale else LinkConfig()
    try:
        run = RunSection(**tables["run"])
        link = replace(link_base, **tables["link"])
        tx = TxConfig(**tables["tx"])
        train_kw = tables["train"]
        if seed_override is not None:
            train_kw = dict(train_kw, seed_train=seed_override, seed_eval=seed_override + 1)
        train = replace(train_base, **train_kw)
        model_kw = dict(tables["model"])
        model_kw.setdefault("train_power", tx.launch_power)
        region = model_kw.pop("region", None)
        if region is not None:
            if region not in REGION_16QAM:
                raise ConfigError(f"model.region: expected one of {sorted(REGION_16QAM)}, got {region}")
            model = region_config(region, **model_kw)
        else:
            model = ModelConfig(**model_kw)
        grid = GridSpec(**tables["grid"], extra={"train_power": model.train_power})
        sections = dict(
            mask=MaskSection(**tables["mask"]),
            sweep=SweepSection(**tables["sweep"]),
            dbp=DbpSection(**tables["dbp"]),
            rmps=RmpsSection(**tables["rmps"]),
        )
    except TypeError as err:  # dataclass rejected a keyword
        raise ConfigError(str(err)) from err
    if out_override is not None:
        run = replace(run, out_dir=out_override)
    if require_out and not run.out_dir:
        raise ConfigError("run.out_dir: required key missing (or pass --out)")
    return RunConfig(run=run, link=link, tx=tx, model=model, train=train, grid=grid, **sections)


def load_run_config(path: str | Path | None, **kwargs) -> RunConfig:
    if path is None:
        return parse_run_config({}, **kwargs)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: invalid TOML: {err}") from err
    return parse_run_config(data, **kwargs)
