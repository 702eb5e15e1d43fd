"""The energy regressor: three stacks of two 1D convolutions with max pooling, then two dense layers.

Stack 1 uses K=2 with zero ("same") padding, stacks 2 and 3 use K=3 without
padding, so a 32-step input shrinks 32-32-32-16-14-12-6-4-2-1 and the flattened
feature vector has as many entries as the last stack has channels.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import layers

WEIGHTS_FORMAT = "terravolt-energynet"
WEIGHTS_VERSION = 1
INPUT_STEPS = 32
INPUT_CHANNELS = 8
DEFAULT_WIDTHS = (32, 32, 64, 64, 128, 128)
DEFAULT_HIDDEN = 128
INPUT_SCALE = 0.5  # metres; relative elevations are divided by this

# (name, kernel size, padding, pool after)
CONV_LAYOUT = (
    ("conv1", 2, "same_zero", False),
    ("conv2", 2, "same_zero", True),
    ("conv3", 3, "none", False),
    ("conv4", 3, "none", True),
    ("conv5", 3, "none", False),
    ("conv6", 3, "none", True),
)


@dataclass
class EnergyNetWeights:
    params: dict
    widths: tuple = DEFAULT_WIDTHS
    hidden: int = DEFAULT_HIDDEN
    input_scale: float = INPUT_SCALE
    target_mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    target_std: np.ndarray = field(default_factory=lambda: np.ones(2))
    train_config: dict | None = None
    version: int = WEIGHTS_VERSION

    def __post_init__(self):
        self.target_mean = np.asarray(self.target_mean, dtype=float).reshape(2)
        self.target_std = np.asarray(self.target_std, dtype=float).reshape(2)
        if np.any(self.target_std <= 0):
            raise ValueError("target std must be positive")
        expected = param_shapes(self.widths, self.hidden)
        for name, shape in expected.items():
            if name not in self.params:
                raise ValueError(f"missing parameter {name!r}")
            if self.params[name].shape != shape:
                raise ValueError(f"{name}: expected shape {shape}, got {self.params[name].shape}")

    def copy(self) -> "EnergyNetWeights":
        return EnergyNetWeights(
            {k: v.copy() for k, v in self.params.items()}, self.widths, self.hidden,
            self.input_scale, self.target_mean.copy(), self.target_std.copy(),
            None if self.train_config is None else dict(self.train_config), self.version,
        )


def param_shapes(widths=DEFAULT_WIDTHS, hidden=DEFAULT_HIDDEN) -> dict:
    shapes = {}
    c_in = INPUT_CHANNELS
    for (name, k, _, _), c_out in zip(CONV_LAYOUT, widths):
        shapes[f"{name}.kernel"] = (c_out, c_in, k)
        shapes[f"{name}.bias"] = (c_out,)
        c_in = c_out
    t = temporal_lengths()[-1]
    shapes["fc1.weight"] = (t * c_in, hidden)
    shapes["fc1.bias"] = (hidden,)
    shapes["fc2.weight"] = (hidden, 2)
    shapes["fc2.bias"] = (2,)
    return shapes


def temporal_lengths(t: int = INPUT_STEPS) -> list[int]:
    """Sequence length at the input and after every conv / pool stage."""
    out = [t]
    for _, k, padding, pool in CONV_LAYOUT:
        if padding == "none":
            t = t - k + 1
        out.append(t)
        if pool:
            t //= 2
            out.append(t)
    return out


def init_weights(seed: int = 0, widths=DEFAULT_WIDTHS, hidden=DEFAULT_HIDDEN) -> EnergyNetWeights:
    """Glorot-uniform kernels, zero biases."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(widths, hidden).items():
        if name.endswith("bias"):
            params[name] = np.zeros(shape)
            continue
        if len(shape) == 3:
            c_out, c_in, k = shape
            fan_in, fan_out = c_in * k, c_out * k
        else:
            fan_in, fan_out = shape
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        params[name] = rng.uniform(-limit, limit, size=shape)
    return EnergyNetWeights(params, tuple(widths), hidden)


def forward(params: dict, x: np.ndarray, keep_cache: bool = False):
    """Normalised forward pass: ``x`` (B, 32, 8) scaled input -> (B, 2) normalised outputs."""
    caches = []
    h = x
    for name, _, padding, pool in CONV_LAYOUT:
        h, c_conv = layers.conv1d_forward(h, params[f"{name}.kernel"], params[f"{name}.bias"], padding)
        h, c_relu = layers.relu_forward(h)
        c_pool = None
        if pool:
            h, c_pool = layers.maxpool1d_forward(h)
        if keep_cache:
            caches.append((c_conv, c_relu, c_pool))
    flat_shape = h.shape
    h = h.reshape(len(h), -1)
    z1, c_fc1 = layers.dense_forward(h, params["fc1.weight"], params["fc1.bias"])
    a1, c_relu1 = layers.relu_forward(z1)
    y, c_fc2 = layers.dense_forward(a1, params["fc2.weight"], params["fc2.bias"])
    if not keep_cache:
        return y, None
    return y, (caches, flat_shape, c_fc1, c_relu1, c_fc2)


def backward(params: dict, dy: np.ndarray, cache) -> dict:
    """Gradients of a scalar loss w.r.t. every parameter, given ``dy = dL/dy``."""
    caches, flat_shape, c_fc1, c_relu1, c_fc2 = cache
    grads = {}
    da1, grads["fc2.weight"], grads["fc2.bias"] = layers.dense_backward(dy, c_fc2, params["fc2.weight"])
    dz1 = layers.relu_backward(da1, c_relu1)
    dh, grads["fc1.weight"], grads["fc1.bias"] = layers.dense_backward(dz1, c_fc1, params["fc1.weight"])
    dh = dh.reshape(flat_shape)
    for (name, _, _, pool), (c_conv, c_relu, c_pool) in zip(reversed(CONV_LAYOUT), reversed(caches)):
        if pool:
            dh = layers.maxpool1d_backward(dh, c_pool)
        dh = layers.relu_backward(dh, c_relu)
        dh, grads[f"{name}.kernel"], grads[f"{name}.bias"] = layers.conv1d_backward(dh, c_conv)
    return grads


def mse_loss_and_grads(params: dict, x: np.ndarray, y: np.ndarray):
    """Mean squared error over samples and both outputs, with its parameter gradients."""
    pred, cache = forward(params, x, keep_cache=True)
    err = pred - y
    loss = float(np.mean(err * err))
    grads = backward(params, 2.0 * err / err.size, cache)
    return loss, grads


def scale_inputs(values, w: EnergyNetWeights) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim == 2:
        v = v[None]
    return v / w.input_scale


def predict(w: EnergyNetWeights, patches) -> np.ndarray:
    """Batch prediction in joules: ``patches`` (B, 32, 8) -> (B, 2) columns ``(e_c, e_r)``."""
    y, _ = forward(w.params, scale_inputs(patches, w))
    return y * w.target_std + w.target_mean


def energynet_forward(patch, w: EnergyNetWeights) -> tuple[float, float]:
    values = getattr(patch, "values", patch)
    y = predict(w, values)[0]
    return float(y[0]), float(y[1])


# --- weights file ---------------------------------------------------------------

def save_weights(w: EnergyNetWeights, path) -> None:
    doc = {
        "format": WEIGHTS_FORMAT,
        "version": w.version,
        "train_config": w.train_config,
        "architecture": {"widths": list(w.widths), "hidden": w.hidden},
        "normalization": {
            "input_scale": w.input_scale,
            "target_mean": [float(v) for v in w.target_mean],
            "target_std": [float(v) for v in w.target_std],
        },
        "layers": {
            name: {"shape": list(arr.shape), "values": [float(v) for v in arr.ravel()]}
            for name, arr in w.params.items()
        },
    }
    with open(os.fspath(path), "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_weights(path) -> EnergyNetWeights:
    with open(os.fspath(path), encoding="ascii") as fh:
        doc = json.load(fh)
    if doc.get("format") != WEIGHTS_FORMAT:
        raise ValueError(f"{path}: not a {WEIGHTS_FORMAT} weights file")
    if doc.get("version") != WEIGHTS_VERSION:
        raise ValueError(f"{path}: unsupported weights version {doc.get('version')}")
    try:
        params = {
            name: np.asarray(entry["values"], dtype=float).reshape(entry["shape"])
            for name, entry in doc["layers"].items()
        }
        norm = doc["normalization"]
        arch = doc["architecture"]
        return EnergyNetWeights(
            params, tuple(arch["widths"]), int(arch["hidden"]), float(norm["input_scale"]),
            np.asarray(norm["target_mean"]), np.asarray(norm["target_std"]), doc.get("train_config"),
            doc["version"],
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"{path}: malformed weights file ({exc!r})") from None


def weights_equal(a: EnergyNetWeights, b: EnergyNetWeights) -> bool:
    return (
        a.params.keys() == b.params.keys()
        and all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
        and np.array_equal(a.target_mean, b.target_mean)
        and np.array_equal(a.target_std, b.target_std)
        and a.input_scale == b.input_scale
        and tuple(a.widths) == tuple(b.widths)
    )
