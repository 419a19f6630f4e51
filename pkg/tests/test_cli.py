import csv

from fibernlc.cli import main
from mask_oracle import brute_force_allowed

TOY = """
[run]
out_dir = "{out}"

[link]
span_count = 2
gamma = {gamma}
ase = {ase}

[tx]
launch_power = 0.0

[model]
tap = 4
block = 8
d_model = 8
key_size = 8
heads = 2
layers = 1
d_ff = 8
window = 1
kernel = 3
rho = 1.0

[train]
train_symbols = 2048
eval_symbols = 1024
max_epochs = 2
patience = 2
warmup_steps = 10
minibatch = 16

[sweep]
powers = [-2.0, 0.0]

[dbp]
steps_per_span = [1]

[grid]
tap = [4]
block = [8]
d_model = [8]
key_size = [8]
heads = [2]
layers = [1]
d_ff = [8]
window = [1]
kernel = [3]
rho = ["none", 1.0]

[rmps]
blocks = [1, 8, 64]
"""


def write_config(tmp_path, gamma=1.3, ase="true", extra=""):
    path = tmp_path / "run.toml"
    path.write_text(TOY.format(out=tmp_path / "out", gamma=gamma, ase=ase) + extra)
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_noiseless_linear_simulation(tmp_path, capsys):
    cfg = write_config(tmp_path, gamma=0.0, ase="false")
    assert main(["simulate", "--config", str(cfg)]) == 0
    rows = read_csv(tmp_path / "out" / "simulate.csv")
    assert [r["split"] for r in rows] == ["train", "eval"]
    assert all(float(r["q_linear_db"]) > 40 for r in rows)
    assert "linear Q" in capsys.readouterr().out


def test_frames_are_cached(tmp_path):
    cfg = write_config(tmp_path, gamma=0.0, ase="false")
    main(["simulate", "--config", str(cfg)])
    frame = tmp_path / "out" / "frame_train.npz"
    first = frame.read_bytes()
    stamp = frame.stat().st_mtime_ns
    main(["simulate", "--config", str(cfg)])
    assert frame.stat().st_mtime_ns == stamp and frame.read_bytes() == first
    main(["simulate", "--config", str(cfg), "--seed-override", "7"])
    assert frame.read_bytes() != first


def test_unknown_key_names_its_path(tmp_path, capsys):
    cfg = write_config(tmp_path, extra="\n[mask]\nwidth = 3\n")
    assert main(["mask", "--config", str(cfg)]) != 0
    assert "mask.width" in capsys.readouterr().err


def test_wrong_type_names_its_path(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(f'[run]\nout_dir = "{tmp_path}"\n[link]\nspan_count = "many"\n')
    assert main(["rmps", "--config", str(path)]) != 0
    assert "link.span_count" in capsys.readouterr().err


def test_missing_output_directory(tmp_path, capsys):
    path = tmp_path / "empty.toml"
    path.write_text("[link]\nspan_count = 2\n")
    assert main(["rmps", "--config", str(path)]) != 0
    assert "run.out_dir" in capsys.readouterr().err


def test_transmit_seed_is_not_configurable(tmp_path, capsys):
    cfg = write_config(tmp_path, extra="")
    text = cfg.read_text().replace("launch_power = 0.0", "launch_power = 0.0\nseed = 3")
    cfg.write_text(text)
    assert main(["rmps", "--config", str(cfg)]) != 0
    assert "tx.seed" in capsys.readouterr().err


def test_mask_prints_zero_ratio(tmp_path, capsys):
    out = tmp_path / "m"
    assert main(["mask", "--out", str(out), "--ell", "128", "--rho", "2.6"]) == 0
    expected = brute_force_allowed(128, 2.6).mean()
    assert f"zero ratio {expected:.4f}" in capsys.readouterr().out
    assert (out / "mask.pgm").exists() and (out / "mask_rows.txt").exists()


def test_region_two_rmps(tmp_path):
    path = tmp_path / "r.toml"
    path.write_text(f'[run]\nout_dir = "{tmp_path}"\n[model]\nregion = 2\nrho = 2.6\n[rmps]\nblocks = [64, 120, 256]\n')
    assert main(["rmps", "--config", str(path)]) == 0
    rows = read_csv(tmp_path / "rmps.csv")
    assert [r["masked"] for r in rows] == ["0", "1"]
    assert float(rows[1]["total_rmps"]) < float(rows[0]["total_rmps"])
    assert len(read_csv(tmp_path / "rmps_vs_block.csv")) == 3


def test_eval_without_checkpoint_fails(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["eval", "--config", str(cfg)]) != 0
    assert "checkpoint" in capsys.readouterr().err


def test_train_eval_heatmap_pipeline(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["train", "--config", str(cfg)]) == 0
    assert (out / "model.ckpt").exists()
    assert len(read_csv(out / "train_history.csv")) == 2
    assert main(["eval", "--config", str(cfg)]) == 0
    (row,) = read_csv(out / "eval.csv")
    assert row["mask"] == "1" and float(row["rmps_total"]) > 0
    assert main(["heatmap", "--config", str(cfg)]) == 0
    assert (out / "heatmaps" / "layer0_head1.pgm").exists()


def test_sweep_dbp_and_grid(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg)]) == 0
    rows = read_csv(out / "sweep.csv")
    assert [float(r["launch_power_dbm"]) for r in rows] == [-2.0, 0.0]
    assert main(["dbp", "--config", str(cfg)]) == 0
    assert len(read_csv(out / "dbp.csv")) == 2
    assert main(["grid", "--config", str(cfg)]) == 0
    assert len(read_csv(out / "results.csv")) == 2
