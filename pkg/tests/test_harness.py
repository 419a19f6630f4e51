import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fibernlc.channel import simulate
from fibernlc.channel.signals import SymbolFrame
from fibernlc.errors import ConfigError, FramingError, TrainingError
from fibernlc.harness import (
    Dataset,
    GridSpec,
    TrainConfig,
    band_fraction,
    build_dataset,
    dataset_loss,
    distortion_targets,
    equalize,
    evaluate,
    export_heatmaps,
    grid_search,
    pareto_envelope,
    score_maps,
    split,
    train,
    training_split,
)
from fibernlc.model import ModelConfig, TransformerNLC, periodic_blocks, region_config

from conftest import linear_link

SMALL = dict(tap=4, block=8, d_model=8, key_size=8, heads=2, layers=1, d_ff=8, window=1, kernel=3)
QUICK = TrainConfig(max_epochs=3, patience=3, warmup_steps=20, minibatch=16)


def random_frame(n, seed=0, power=4.0, scale=1.0):
    rng = np.random.default_rng(seed)
    tx = rng.choice([-3, -1, 1, 3], size=(2, n)) + 1j * rng.choice([-3, -1, 1, 3], size=(2, n))
    tx = tx / np.sqrt(10)
    rx = tx + scale * 0.05 * (rng.normal(size=(2, n)) + 1j * rng.normal(size=(2, n)))
    return SymbolFrame(rx, tx, power)


def test_block_count_for_region_two():
    data = build_dataset(random_frame(2**12), region_config(2))
    assert len(data) == 31
    assert data.inputs.shape == (31, 256, 4)
    assert data.targets.shape == (31, 128, 2)


def test_targets_are_x_distortion():
    frame = random_frame(64)
    diff = frame.rx[0] - frame.tx_ref[0]
    np.testing.assert_array_equal(distortion_targets(frame), np.stack([diff.real, diff.imag], 1))


def test_targets_vanish_on_noiseless_linear_link(tx):
    frame = simulate(tx, linear_link(), 2**10).frame
    assert np.abs(distortion_targets(frame)).max() < 1e-3


def test_split_takes_trailing_blocks():
    data = Dataset(np.arange(20)[:, None, None] * np.ones((1, 3, 4)), np.zeros((20, 1, 2)))
    tr, val = split(data, 0.1)
    assert len(tr) == 18 and len(val) == 2
    assert val.inputs[:, 0, 0].tolist() == [18, 19]
    with pytest.raises(FramingError):
        split(data.subset(slice(0, 1)), 0.1)


def test_both_polarizations_doubles_the_sets():
    cfg = ModelConfig(**SMALL)
    frame = random_frame(400)
    tr1, val1 = training_split(frame, cfg, 0.1)
    tr2, val2 = training_split(frame, cfg, 0.1, both_polarizations=True)
    assert len(tr2) == 2 * len(tr1) and len(val2) == 2 * len(val1)


def test_equal_seeds_rejected():
    with pytest.raises(ConfigError):
        TrainConfig(seed_train=3, seed_eval=3)


@pytest.mark.parametrize("bad", [dict(patience=0), dict(val_fraction=1.0), dict(lr_scale=0.0)])
def test_invalid_train_config(bad):
    with pytest.raises(ConfigError):
        TrainConfig(**bad)


def test_blocks_per_step():
    assert TrainConfig().blocks_per_step(128) == 4
    assert TrainConfig().blocks_per_step(100) == 6
    assert TrainConfig().blocks_per_step(1024) == 1


def test_zero_targets_are_learned(rng):
    cfg = ModelConfig(**SMALL)
    model = TransformerNLC(cfg, seed=0)
    inputs = rng.normal(size=(40, cfg.input_length, 4))
    data = Dataset(inputs, np.zeros((40, cfg.block, 2)))
    tr, val = split(data, 0.1)
    start = dataset_loss(model, val)
    result = train(model, tr, val, TrainConfig(max_epochs=60, patience=60, warmup_steps=20, minibatch=32, lr_scale=3))
    assert result.best_val_loss < 1e-3 * start
    assert dataset_loss(model, val) == pytest.approx(result.best_val_loss)


def test_best_so_far_is_non_increasing(rng):
    cfg = ModelConfig(**SMALL)
    model = TransformerNLC(cfg, seed=0)
    data = Dataset(rng.normal(size=(30, cfg.input_length, 4)), rng.normal(size=(30, cfg.block, 2)))
    tr, val = split(data, 0.2)
    result = train(model, tr, val, TrainConfig(max_epochs=8, patience=2, warmup_steps=10, minibatch=16))
    curve = result.best_so_far()
    assert np.all(np.diff(curve) <= 0)
    assert result.best_val_loss == curve[-1]
    assert len(result.val_loss) - result.best_epoch <= 2


def test_training_is_deterministic(rng):
    cfg = ModelConfig(**SMALL)
    data = Dataset(rng.normal(size=(20, cfg.input_length, 4)), rng.normal(size=(20, cfg.block, 2)))
    tr, val = split(data, 0.2)
    runs = [train(TransformerNLC(cfg, seed=4), tr, val, QUICK) for _ in range(2)]
    assert runs[0].val_loss == runs[1].val_loss


def test_non_finite_input_raises(rng):
    cfg = ModelConfig(**SMALL)
    inputs = rng.normal(size=(10, cfg.input_length, 4))
    inputs[3, 5, 1] = np.nan
    data = Dataset(inputs, np.zeros((10, cfg.block, 2)))
    with pytest.raises(TrainingError, match="epoch 1"):
        train(TransformerNLC(cfg), data, data, QUICK)


def test_zero_model_leaves_q_unchanged():
    cfg = ModelConfig(**SMALL)
    model = TransformerNLC(cfg, seed=0)
    model.params["out.w3"].value[...] = 0
    model.params["out.b3"].value[...] = 0
    frame = random_frame(500, scale=8.0)
    res = evaluate(model, frame)
    assert res.q_db == pytest.approx(res.q_linear)
    assert res.gain_db == pytest.approx(0.0)
    np.testing.assert_array_equal(equalize(model, frame).rx, frame.rx)


def test_perfect_estimate_removes_distortion():
    """A model whose output equals the target restores the transmitted symbols."""
    cfg = ModelConfig(**SMALL, train_power=4.0)
    frame = random_frame(200, scale=8.0)
    # noisy rx samples are distinct, so each one identifies its reference symbol
    sent = {complex(r): complex(t) for r, t in zip(frame.rx.ravel(), frame.tx_ref.ravel())}

    class Oracle(TransformerNLC):
        def forward(self, x, **kwargs):
            t, b = self.config.tap, self.config.block
            rx = x[:, t : t + b, 0] + 1j * x[:, t : t + b, 1]
            err = rx - np.vectorize(sent.get)(rx)
            return np.stack([err.real, err.imag], -1), {}

    fixed = equalize(Oracle(cfg), frame)
    np.testing.assert_allclose(fixed.rx, frame.tx_ref, atol=1e-12)


def test_y_polarization_uses_swapped_frame():
    cfg = ModelConfig(**SMALL)
    model = TransformerNLC(cfg, seed=1)
    frame = random_frame(300)
    swapped = SymbolFrame(frame.rx[::-1], frame.tx_ref[::-1], frame.launch_power)
    a, b = equalize(model, frame), equalize(model, swapped)
    np.testing.assert_allclose(a.rx, b.rx[::-1])


points = st.lists(
    st.tuples(st.floats(1, 1e6), st.floats(-5, 30), st.text(min_size=1, max_size=4)), max_size=30
)


@settings(max_examples=100, deadline=None)
@given(points)
def test_envelope_is_monotone_and_dominant(pts):
    env = pareto_envelope(pts)
    for a, b in zip(env, env[1:]):
        assert b[0] >= a[0] and b[1] > a[1]
    for p in pts:
        cheaper = [e for e in env if e[0] <= p[0]]
        assert cheaper and max(e[1] for e in cheaper) >= p[1]


def test_envelope_example():
    pts = [(10, 5, "a"), (20, 4, "b"), (30, 7, "c"), (30, 8, "d"), (5, 1, "e")]
    assert [p[2] for p in pareto_envelope(pts)] == ["e", "a", "d"]


def test_grid_spec_product_and_validation():
    grid = GridSpec(tap=(4, 6), rho=(None, 1.0), d_model=8, key_size=(8,), heads=2, d_ff=8, block=8, window=1, kernel=3)
    assert len(grid.configs()) == 4
    with pytest.raises(ConfigError):
        GridSpec(tap=())


def test_single_config_grid(tmp_path):
    grid = GridSpec(**{k: v for k, v in SMALL.items()})
    rows, env = grid_search(grid, random_frame(400, seed=1), random_frame(400, seed=2), QUICK, out_dir=tmp_path)
    assert len(rows) == 1
    assert [e[2] for e in env[False]] == [rows[0].config_id] and env[True] == []
    with open(tmp_path / "results.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 1


def test_toy_grid_writes_every_row(tmp_path):
    params = dict(SMALL, tap=(4, 6), rho=(None, 1.0))
    rows, env = grid_search(GridSpec(**params), random_frame(400, seed=1), random_frame(400, seed=2), QUICK, out_dir=tmp_path)
    assert len(rows) == 4
    with open(tmp_path / "results.csv") as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == 4
    assert {r["mask"] for r in table} == {"0", "1"}
    assert all(math.isfinite(float(r["rmps_total"])) for r in table)
    masked = [float(r["rmps_total"]) for r in table if r["mask"] == "1"]
    dense = [float(r["rmps_total"]) for r in table if r["mask"] == "0"]
    assert sorted(masked)[0] < sorted(dense)[0]
    with open(tmp_path / "envelope.csv") as fh:
        assert len(fh.read().strip().splitlines()) >= 3


def test_invalid_grid_entry_is_logged(tmp_path):
    params = dict(SMALL, key_size=(8, 7))
    rows, _ = grid_search(GridSpec(**params), random_frame(400, seed=1), random_frame(400, seed=2), QUICK, out_dir=tmp_path)
    assert len(rows) == 1
    assert "invalid config" in (tmp_path / "failures.log").read_text()


def test_heatmap_shapes_and_masked_zeros(tmp_path, rng):
    cfg = ModelConfig(**SMALL, rho=0.5)
    model = TransformerNLC(cfg, seed=0)
    blocks, _ = periodic_blocks(random_frame(64).components, cfg)
    maps = score_maps(model, blocks)
    n = cfg.seq_length
    assert maps.shape == (1, 2, n, n)
    assert np.all(maps[..., ~model.mask.allowed] == 0)
    assert np.all(maps[..., model.mask.allowed] > 0)
    out = export_heatmaps(model, blocks, tmp_path)
    assert len(out) == 2
    assert (tmp_path / "layer0_head1.pgm").read_bytes().startswith(f"P5\n{n} {n}\n255\n".encode())
    assert len((tmp_path / "band.csv").read_text().splitlines()) == 3


def test_band_fraction():
    m = np.ones((4, 4))
    assert band_fraction(m, 0) == pytest.approx(4 / 16)
    assert band_fraction(m, 1) == pytest.approx(10 / 16)
    assert band_fraction(np.zeros((3, 3)), 1) == 0.0
