"""Minimal numpy network stack: 1D conv, max-pool, dense, ReLU, MSE, RMSprop."""

from .layers import conv1d, maxpool1d
from .metrics import Metrics, metrics
from .network import (
    EnergyNetWeights, backward, energynet_forward, forward, init_weights, load_weights,
    mse_loss_and_grads, predict, save_weights, temporal_lengths, weights_equal,
)
from .optim import rmsprop_init, rmsprop_step
from .train import TrainConfig, train

__all__ = [
    "conv1d", "maxpool1d", "Metrics", "metrics", "EnergyNetWeights", "backward",
    "energynet_forward", "forward", "init_weights", "load_weights", "mse_loss_and_grads",
    "predict", "save_weights", "temporal_lengths", "weights_equal", "rmsprop_init",
    "rmsprop_step", "TrainConfig", "train",
]
