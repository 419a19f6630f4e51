"""Exhaustive grid search with CSV export and Q-versus-RMPS envelopes."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from fibernlc.channel.signals import SymbolFrame
from fibernlc.errors import ConfigError
from fibernlc.harness.config import GridSpec, TrainConfig
from fibernlc.harness.dataset import training_split
from fibernlc.harness.evaluation import EvalResult, evaluate
from fibernlc.harness.training import train
from fibernlc.model.config import ModelConfig
from fibernlc.model.transformer import TransformerNLC

log = logging.getLogger(__name__)

RESULT_FIELDS = (
    "config_id", "mask", "rho", "tap", "d_model", "d_k", "heads", "layers", "d_ff",
    "window", "block", "rmps_total", "launch_power_dbm", "q_db",
)
ENVELOPE_FIELDS = ("rmps_total", "q_db", "config_id")


@dataclass(frozen=True)
class GridRow:
    config_id: str
    config: ModelConfig
    result: EvalResult

    def as_dict(self) -> dict:
        c = self.config
        return {
            "config_id": self.config_id,
            "mask": int(c.masked),
            "rho": "" if c.rho is None else c.rho,
            "tap": c.tap,
            "d_model": c.d_model,
            "d_k": c.d_k,
            "heads": c.heads,
            "layers": c.layers,
            "d_ff": c.d_ff,
            "window": c.window,
            "block": c.block,
            "rmps_total": self.result.rmps_total,
            "launch_power_dbm": self.result.launch_power,
            "q_db": self.result.q_db,
        }


def pareto_envelope(points: list[tuple[float, float, str]]) -> list[tuple[float, float, str]]:
    """Upper-left envelope of (rmps, q, id): each kept point beats every cheaper one.

    Ties in RMPS keep the higher Q.  Along the result, RMPS and Q both increase.
    """
    ordered = sorted(points, key=lambda p: (p[0], -p[1]))
    out: list[tuple[float, float, str]] = []
    best = -math.inf
    for p in ordered:
        if p[1] > best:
            out.append(p)
            best = p[1]
    return out


def _run_one(args) -> tuple[str, EvalResult | str]:
    config_id, config, train_frame, eval_frame, tconf = args
    try:
        model = TransformerNLC(config, seed=tconf.init_seed)
        tr, val = training_split(train_frame, config, tconf.val_fraction, tconf.both_polarizations)
        train(model, tr, val, tconf)
        return config_id, evaluate(model, eval_frame, config_id=config_id)
    except Exception as err:  # one bad config must not end the search
        return config_id, f"{type(err).__name__}: {err}"


def grid_search(
    grid: GridSpec,
    train_frame: SymbolFrame,
    eval_frame: SymbolFrame,
    train_config: TrainConfig,
    out_dir: str | Path | None = None,
    workers: int = 1,
    budget: int | None = None,
) -> tuple[list[GridRow], dict[bool, list[tuple[float, float, str]]]]:
    """Train and evaluate every valid config of ``grid`` (at most ``budget`` of them).

    Invalid or failing configs are logged and skipped.  Returns the rows and
    the envelopes keyed by mask flag; with ``out_dir`` also writes
    ``results.csv``, ``envelope.csv`` (unmasked envelope, then masked) and
    ``failures.log``.
    """
    jobs, failures = [], []
    for i, (params, config) in enumerate(grid.model_configs()):
        config_id = f"c{i:04d}"
        if isinstance(config, ConfigError):
            failures.append(f"{config_id}: invalid config {params}: {config}")
            continue
        jobs.append((config_id, config, train_frame, eval_frame, train_config))
    if budget is not None:
        jobs = jobs[:budget]
    configs = {j[0]: j[1] for j in jobs}

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = [_run_one(j) for j in jobs]

    rows = []
    for config_id, outcome in outcomes:
        if isinstance(outcome, str):
            failures.append(f"{config_id}: {outcome}")
            continue
        rows.append(GridRow(config_id, configs[config_id], outcome))
    for msg in failures:
        log.warning("grid: %s", msg)

    envelopes = {
        flag: pareto_envelope(
            [(r.result.rmps_total, r.result.q_db, r.config_id) for r in rows if r.config.masked == flag]
        )
        for flag in (False, True)
    }
    if out_dir is not None:
        write_grid(Path(out_dir), rows, envelopes, failures)
    return rows, envelopes


def write_grid(out: Path, rows: list[GridRow], envelopes, failures=()) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow(r.as_dict())
    with open(out / "envelope.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ENVELOPE_FIELDS)
        for flag in (False, True):
            for rmps, q, cid in envelopes[flag]:
                writer.writerow((rmps, q, cid))
    (out / "failures.log").write_text("".join(f + "\n" for f in failures))
