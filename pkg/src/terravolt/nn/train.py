"""Mini-batch RMSprop training on normalised targets."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .network import (
    DEFAULT_HIDDEN, DEFAULT_WIDTHS, forward, init_weights, mse_loss_and_grads,
    scale_inputs,
)
from .optim import rmsprop_init, rmsprop_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-4
    rmsprop_decay: float = 0.9
    rmsprop_epsilon: float = 1e-8
    seed: int = 0
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not (self.learning_rate > 0 and self.rmsprop_decay > 0 and self.rmsprop_epsilon > 0):
            raise ValueError("optimizer constants must be positive")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in (0, 1)")


def _mse(params, x, y, chunk=512):
    total = 0.0
    for i in range(0, len(x), chunk):
        pred, _ = forward(params, x[i:i + chunk])
        total += float(np.sum((pred - y[i:i + chunk]) ** 2))
    return total / y.size


def train(
    patches, targets, cfg: TrainConfig = TrainConfig(), widths=DEFAULT_WIDTHS,
    hidden=DEFAULT_HIDDEN, guarded: bool = False,
):
    """Fit the regressor. ``patches`` is (N, 32, 8) metres, ``targets`` (N, 2) joules.

    Returns ``(weights, history)`` where history holds per-epoch ``train_mse``
    and ``val_mse`` in normalised target units. With ``guarded=True`` the
    training-set loss is evaluated after every epoch and an epoch that
    increases it is undone and retried at half the learning rate.
    """
    x_all = np.asarray(patches, dtype=float)
    y_all = np.asarray(targets, dtype=float)
    n = len(x_all)
    if n == 0:
        raise ValueError("empty dataset")
    if y_all.shape != (n, 2):
        raise ValueError(f"targets must be (N, 2), got {y_all.shape}")
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(n)
    n_val = int(round(n * cfg.validation_fraction))
    n_val = min(max(n_val, 1), n - 1) if n > 1 else 0
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    if len(tr_idx) < cfg.batch_size:
        raise ValueError(f"{len(tr_idx)} training samples is fewer than batch size {cfg.batch_size}")

    mean = y_all[tr_idx].mean(axis=0)
    std = y_all[tr_idx].std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    w = init_weights(int(rng.integers(2**31)), widths, hidden)
    w.target_mean, w.target_std = mean, std
    w.train_config = asdict(cfg)

    x_tr = scale_inputs(x_all[tr_idx], w)
    y_tr = (y_all[tr_idx] - mean) / std
    x_val = scale_inputs(x_all[val_idx], w)
    y_val = (y_all[val_idx] - mean) / std

    state = rmsprop_init(w.params)
    lr = cfg.learning_rate
    history = {"train_mse": [], "val_mse": []}
    prev = _mse(w.params, x_tr, y_tr) if guarded else None
    for epoch in range(cfg.epochs):
        if guarded:
            snapshot = ({k: v.copy() for k, v in w.params.items()}, {k: v.copy() for k, v in state.items()})
        order = rng.permutation(len(x_tr))
        running = 0.0
        for i in range(0, len(order), cfg.batch_size):
            b = order[i:i + cfg.batch_size]
            loss, grads = mse_loss_and_grads(w.params, x_tr[b], y_tr[b])
            rmsprop_step(w.params, grads, state, lr, cfg.rmsprop_decay, cfg.rmsprop_epsilon)
            running += loss * len(b)
        train_mse = running / len(order)
        if guarded:
            train_mse = _mse(w.params, x_tr, y_tr)
            if train_mse > prev:
                for k in w.params:
                    w.params[k][...] = snapshot[0][k]
                    state[k][...] = snapshot[1][k]
                lr *= 0.5
                train_mse = prev
            prev = train_mse
        history["train_mse"].append(train_mse)
        history["val_mse"].append(_mse(w.params, x_val, y_val) if len(x_val) else float("nan"))
        log.info("epoch %d train %.5f val %.5f", epoch + 1, train_mse, history["val_mse"][-1])
    return w, history
