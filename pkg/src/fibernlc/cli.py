"""``fibernlc`` command line: simulate, train, eval, sweep, grid, mask, rmps, dbp, heatmap.

Every command reads an optional TOML run config (see :mod:`fibernlc.runconfig`)
and writes CSV or binary artifacts under the output directory.  Frames are
cached in the output directory next to a JSON echo of the settings that made
them and are regenerated when those settings change.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

from fibernlc.channel.config import TxConfig
from fibernlc.channel.link import optimize_dbp, simulate
from fibernlc.channel.metrics import evm_db
from fibernlc.channel.signals import SymbolFrame, save_waveform
from fibernlc.complexity import CSV_FIELDS, rmps_vs_block, total_rmps
from fibernlc.errors import ConfigError, FramingError, NumericalDivergenceError, TrainingError
from fibernlc.harness.dataset import training_split
from fibernlc.harness.evaluation import evaluate, linear_q
from fibernlc.harness.grid import RESULT_FIELDS, GridRow, grid_search
from fibernlc.harness.heatmap import export_heatmaps
from fibernlc.harness.sweep import SWEEP_FIELDS, power_sweep
from fibernlc.harness.training import train
from fibernlc.masks import block_mask, zero_ratio
from fibernlc.model.framing import periodic_blocks
from fibernlc.model.transformer import TransformerNLC
from fibernlc.runconfig import RunConfig, load_run_config

log = logging.getLogger("fibernlc")

THREADS_ENV = "FIBER_NLC_THREADS"


def _workers(args, cfg: RunConfig) -> int:
    n = args.workers if args.workers is not None else cfg.run.workers
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError as err:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}") from err
    return max(1, n)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _tx(cfg: RunConfig, seed: int, power: float | None = None) -> TxConfig:
    tx = replace(cfg.tx, seed=seed)
    return tx if power is None else replace(tx, launch_power=power)


def _frame(cfg: RunConfig, split: str, workers: int) -> SymbolFrame:
    """Cached frame for ``split`` ('train' or 'eval'), simulated on a settings change."""
    seed = cfg.train.seed_train if split == "train" else cfg.train.seed_eval
    n = cfg.train.train_symbols if split == "train" else cfg.train.eval_symbols
    tx = _tx(cfg, seed)
    echo = {"link": asdict(cfg.link), "tx": asdict(tx), "symbols": n}
    out = cfg.out_dir
    path, meta = out / f"frame_{split}.npz", out / f"frame_{split}.json"
    if path.exists() and meta.exists() and json.loads(meta.read_text()) == echo:
        return SymbolFrame.load(path)
    log.info("simulating %s frame: %d symbols, seed %d", split, n, seed)
    run = simulate(tx, cfg.link, n, workers=workers)
    out.mkdir(parents=True, exist_ok=True)
    run.frame.save(path)
    meta.write_text(json.dumps(echo, sort_keys=True, indent=1) + "\n")
    if cfg.run.save_waveform:
        save_waveform(run.received, out / f"received_{split}.wave")
    return run.frame


def _checkpoint(cfg: RunConfig) -> Path:
    return Path(cfg.run.checkpoint) if cfg.run.checkpoint else cfg.out_dir / "model.ckpt"


def _load_model(cfg: RunConfig) -> TransformerNLC:
    path = _checkpoint(cfg)
    if not path.exists():
        raise ConfigError(f"no checkpoint at {path}; run 'fibernlc train' first or set run.checkpoint")
    return TransformerNLC.load(path)


# --- commands ------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, args) -> int:
    workers = _workers(args, cfg)
    rows = []
    for split in ("train", "eval"):
        frame = _frame(cfg, split, workers)
        seed = cfg.train.seed_train if split == "train" else cfg.train.seed_eval
        q = linear_q(frame)
        rows.append((split, seed, len(frame), frame.launch_power, q, evm_db(frame)))
        print(f"{split}: {len(frame)} symbols at {frame.launch_power:g} dBm, linear Q = {q:.3f} dB")
    _write_csv(
        cfg.out_dir / "simulate.csv",
        ("split", "seed", "symbols", "launch_power_dbm", "q_linear_db", "evm_db"),
        rows,
    )
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    frame = _frame(cfg, "train", _workers(args, cfg))
    model = TransformerNLC(cfg.model, seed=cfg.train.init_seed)
    tr, val = training_split(frame, cfg.model, cfg.train.val_fraction, cfg.train.both_polarizations)
    result = train(model, tr, val, cfg.train)
    path = _checkpoint(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    model.save(path)
    _write_csv(
        cfg.out_dir / "train_history.csv",
        ("epoch", "train_loss", "val_loss"),
        [(i + 1, a, b) for i, (a, b) in enumerate(zip(result.train_loss, result.val_loss))],
    )
    print(f"trained {len(result.val_loss)} epochs, best epoch {result.best_epoch}, "
          f"val MSE {result.best_val_loss:.6g}; checkpoint {path}")
    return 0


def _result_row(config_id, model, res) -> dict:
    return GridRow(config_id, model.config, res).as_dict()


def cmd_eval(cfg: RunConfig, args) -> int:
    model = _load_model(cfg)
    frame = _frame(cfg, "eval", _workers(args, cfg))
    res = evaluate(model, frame, config_id="model", sparse=model.config.masked)
    row = _result_row("model", model, res)
    _write_csv(cfg.out_dir / "eval.csv", RESULT_FIELDS + ("q_linear_db",),
               [[row[k] for k in RESULT_FIELDS] + [res.q_linear]])
    print(f"Q = {res.q_db:.3f} dB (X {res.q_x:.3f}, Y {res.q_y:.3f}), linear Q = {res.q_linear:.3f} dB, "
          f"RMPS = {res.rmps_total:.0f}")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    path = _checkpoint(cfg)
    model = TransformerNLC.load(path) if path.exists() else None
    points = power_sweep(
        _tx(cfg, cfg.train.seed_eval),
        cfg.link,
        cfg.sweep.powers,
        cfg.train.eval_symbols,
        model=model,
        dbp_steps=cfg.sweep.dbp_steps,
        workers=_workers(args, cfg),
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg.out_dir / "sweep.csv", SWEEP_FIELDS, [p.as_row() for p in points])
    for p in points:
        print(f"{p.launch_power:6.2f} dBm  linear {p.q_linear:7.3f}  nn {p.q_nn:7.3f}  dbp {p.q_dbp:7.3f}")
    return 0


def cmd_grid(cfg: RunConfig, args) -> int:
    workers = _workers(args, cfg)
    train_frame = _frame(cfg, "train", workers)
    eval_frame = _frame(cfg, "eval", workers)
    rows, env = grid_search(cfg.grid, train_frame, eval_frame, cfg.train, cfg.out_dir, workers=workers)
    print(f"{len(rows)} configs evaluated; envelope sizes: unmasked {len(env[False])}, masked {len(env[True])}")
    return 0


def cmd_mask(cfg: RunConfig, args) -> int:
    m = cfg.mask
    ell = args.ell if args.ell is not None else m.ell
    rho = args.rho if args.rho is not None else m.rho
    block = args.block if args.block is not None else m.block
    mask = block_mask(ell, rho, block, m.center_row)
    ratio = zero_ratio(mask)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    mask.save_pgm(cfg.out_dir / "mask.pgm")
    mask.save_row_lists(cfg.out_dir / "mask_rows.txt")
    print(f"ell={ell} rho={rho:g} block={block}: {mask.size}x{mask.size}, zero ratio {ratio:.4f}")
    return 0


def cmd_rmps(cfg: RunConfig, args) -> int:
    reports = [total_rmps(replace(cfg.model, rho=None))]
    if cfg.model.masked:
        reports.append(total_rmps(cfg.model))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg.out_dir / "rmps.csv", CSV_FIELDS,
               [[r.to_row()[k] for k in CSV_FIELDS] for r in reports])
    for r in reports:
        print(f"{'masked' if r.masked else 'unmasked'}: total {r.total_rmps:.1f} RMPS "
              f"(attention {r.attention_rmps:.1f}, value mix {r.value_mix_rmps:.1f})")
    if cfg.rmps.blocks:
        curve = rmps_vs_block(cfg.model, cfg.rmps.blocks)
        _write_csv(cfg.out_dir / "rmps_vs_block.csv", ("block", "total_rmps", "attention_rmps"),
                   zip(curve.blocks, curve.total, curve.attention))
        print(f"attention term minimized at b = {curve.attention_minimizer}")
    return 0


def cmd_dbp(cfg: RunConfig, args) -> int:
    tx = _tx(cfg, cfg.train.seed_eval)
    run = simulate(tx, cfg.link, cfg.train.eval_symbols, workers=_workers(args, cfg))
    rows = [("linear", "", "", linear_q(run.frame))]
    print(f"linear: Q = {rows[0][3]:.3f} dB")
    for steps in cfg.dbp.steps_per_span:
        xi, q = optimize_dbp(run, tx, cfg.link, steps, bounds=(cfg.dbp.xi_min, cfg.dbp.xi_max))
        rows.append(("dbp", steps, xi, q))
        print(f"DBP {steps} StPS: xi = {xi:.3f}, Q = {q:.3f} dB")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(cfg.out_dir / "dbp.csv", ("method", "steps_per_span", "xi", "q_db"), rows)
    return 0


def cmd_heatmap(cfg: RunConfig, args) -> int:
    model = _load_model(cfg)
    frame = _frame(cfg, "eval", _workers(args, cfg))
    blocks, _ = periodic_blocks(frame.components, model.config)
    maps = export_heatmaps(model, blocks[: cfg.run.heatmap_blocks], cfg.out_dir / "heatmaps")
    print(f"wrote {len(maps)} heat maps to {cfg.out_dir / 'heatmaps'}")
    return 0


COMMANDS = {
    "simulate": (cmd_simulate, "simulate train/eval frames and report linear Q"),
    "train": (cmd_train, "train the configured model"),
    "eval": (cmd_eval, "evaluate a checkpoint on the eval frame"),
    "sweep": (cmd_sweep, "Q versus launch power (linear, model, DBP)"),
    "grid": (cmd_grid, "grid search with results and envelope CSVs"),
    "mask": (cmd_mask, "render an attention mask and print its zero ratio"),
    "rmps": (cmd_rmps, "complexity report for the configured model"),
    "dbp": (cmd_dbp, "digital back-propagation baseline"),
    "heatmap": (cmd_heatmap, "export attention-score heat maps"),
}

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run config")
    common.add_argument("--out", help="output directory (overrides run.out_dir)")
    common.add_argument("--seed-override", type=int, help="use N / N+1 as train / eval symbol seeds")
    common.add_argument("--workers", type=int, help="parallel workers (capped by $%s)" % THREADS_ENV)
    common.add_argument("--desk-scale", action="store_true", help="8 spans, 2^15/2^14 symbols, desk training protocol")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fibernlc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "mask":
            p.add_argument("--ell", type=int, help="context length l (even; overrides mask.ell)")
            p.add_argument("--rho", type=float, help="selection radius rho (overrides mask.rho)")
            p.add_argument("--block", type=int, help="block size b, 1 for a single target (overrides mask.block)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_run_config(
            args.config,
            desk_scale=args.desk_scale,
            out_override=args.out,
            seed_override=args.seed_override,
        )
        return COMMANDS[args.command][0](cfg, args)
    except (ConfigError, FramingError, TrainingError, NumericalDivergenceError) as err:
        print(f"fibernlc {args.command}: error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"fibernlc {args.command}: I/O error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
