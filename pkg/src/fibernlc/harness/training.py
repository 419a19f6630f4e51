"""Mini-batch training with warm-up, early stopping and best-checkpoint selection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from fibernlc.errors import TrainingError
from fibernlc.harness.config import TrainConfig
from fibernlc.harness.dataset import Dataset
from fibernlc.model.transformer import TransformerNLC, mse_loss
from fibernlc.numerics.optim import adam_step, global_grad_norm, warmup_lr

log = logging.getLogger(__name__)

# validation forward passes are chunked to bound memory
_EVAL_CHUNK = 32


@dataclass
class TrainResult:
    model: TransformerNLC
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    steps: int = 0

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch - 1]

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.val_loss))


def dataset_loss(model: TransformerNLC, data: Dataset) -> float:
    total = 0.0
    for i in range(0, len(data), _EVAL_CHUNK):
        out, _ = model.forward(data.inputs[i : i + _EVAL_CHUNK])
        diff = out - data.targets[i : i + _EVAL_CHUNK]
        total += float(np.sum(diff * diff))
    return total / data.targets.size


def train(
    model: TransformerNLC,
    train_set: Dataset,
    val_set: Dataset,
    config: TrainConfig,
) -> TrainResult:
    """Fit ``model`` in place and return it restored to its best validation epoch.

    Each epoch visits the training blocks in a fresh permutation drawn from
    ``config.seed_train``.  Training stops after ``config.patience`` epochs
    without a new best validation loss, or at ``config.max_epochs``.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed_train))
    per_step = config.blocks_per_step(model.config.block)
    params = model.parameters()
    result = TrainResult(model)
    best_state = {k: v.copy() for k, v in model.state().items()}
    best = math.inf
    step = 0
    model.zero_grad()
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train_set))
        running = 0.0
        for i in range(0, len(order), per_step):
            batch = order[i : i + per_step]
            out, cache = model.forward(train_set.inputs[batch])
            loss, dout = mse_loss(out, train_set.targets[batch])
            if not math.isfinite(loss):
                raise TrainingError(
                    f"loss became {loss} at epoch {epoch}, step {step + 1} "
                    f"(last lr {warmup_lr(max(step, 1), model.config.d_model, config.warmup_steps):.3g})"
                )
            model.backward(dout, cache)
            norm = global_grad_norm(params)
            if not math.isfinite(norm):
                raise TrainingError(f"non-finite gradient norm at epoch {epoch}, step {step + 1}")
            step += 1
            lr = config.lr_scale * warmup_lr(step, model.config.d_model, config.warmup_steps)
            adam_step(params, lr)
            running += loss * len(batch)
        result.train_loss.append(running / len(order))
        val = dataset_loss(model, val_set)
        if not math.isfinite(val):
            raise TrainingError(f"validation loss became {val} at epoch {epoch}")
        result.val_loss.append(val)
        if val < best:
            best = val
            result.best_epoch = epoch
            best_state = {k: v.copy() for k, v in model.state().items()}
        log.debug("epoch %d train %.4g val %.4g", epoch, result.train_loss[-1], val)
        if epoch - result.best_epoch >= config.patience:
            break
    for k, v in best_state.items():
        model.params[k].value[...] = v
    result.steps = step
    return result
