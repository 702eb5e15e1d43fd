"""Layer primitives with explicit forward/backward passes.

Activations are laid out ``(batch, time, channels)``. Convolutions are
cross-correlations along the time axis computed through an im2col matrix so a
whole mini-batch is a single matrix product.
"""

from __future__ import annotations

import numpy as np

PADDINGS = ("same_zero", "none")


def _pad_amounts(k: int, padding: str) -> tuple[int, int]:
    if padding == "none":
        return 0, 0
    if padding == "same_zero":
        left = (k - 1) // 2
        return left, k - 1 - left
    raise ValueError(f"padding must be one of {PADDINGS}, got {padding!r}")


def conv1d_forward(x, kernel, bias, padding="none"):
    """``x`` (B, T, Cin), ``kernel`` (Cout, Cin, K), ``bias`` (Cout,) -> (B, T', Cout), cache."""
    if x.ndim != 3:
        raise ValueError(f"expected (batch, time, channels), got shape {x.shape}")
    c_out, c_in, k = kernel.shape
    if x.shape[2] != c_in:
        raise ValueError(f"input has {x.shape[2]} channels, kernel expects {c_in}")
    if bias.shape != (c_out,):
        raise ValueError(f"bias shape {bias.shape} does not match {c_out} output channels")
    left, right = _pad_amounts(k, padding)
    xp = np.pad(x, ((0, 0), (left, right), (0, 0))) if left or right else x
    t_out = xp.shape[1] - k + 1
    if t_out < 1:
        raise ValueError(f"sequence of length {x.shape[1]} is shorter than kernel {k}")
    cols = np.concatenate([xp[:, j:j + t_out, :] for j in range(k)], axis=2)
    wmat = kernel.transpose(2, 1, 0).reshape(k * c_in, c_out)
    out = cols @ wmat + bias
    return out, (cols, wmat, x.shape, left, kernel.shape)


def conv1d_backward(dout, cache):
    cols, wmat, x_shape, left, kshape = cache
    c_out, c_in, k = kshape
    b, t, _ = x_shape
    t_out = dout.shape[1]
    dw = cols.reshape(-1, k * c_in).T @ dout.reshape(-1, c_out)
    dkernel = dw.reshape(k, c_in, c_out).transpose(2, 1, 0)
    dbias = dout.sum(axis=(0, 1))
    dcols = dout @ wmat.T
    dxp = np.zeros((b, t_out + k - 1, c_in))
    for j in range(k):
        dxp[:, j:j + t_out, :] += dcols[:, :, j * c_in:(j + 1) * c_in]
    return dxp[:, left:left + t, :], dkernel, dbias


def conv1d(x, kernel, bias, padding="none"):
    """Single-sample convenience: ``x`` is (T, Cin) and the result (T', Cout)."""
    x = np.asarray(x, dtype=float)
    out, _ = conv1d_forward(x[None], np.asarray(kernel, float), np.asarray(bias, float), padding)
    return out[0]


def maxpool1d_forward(x, window=2):
    b, t, c = x.shape
    if t % window:
        raise ValueError(f"time length {t} is not divisible by pool window {window}")
    xr = x.reshape(b, t // window, window, c)
    arg = xr.argmax(axis=2)
    out = np.take_along_axis(xr, arg[:, :, None, :], axis=2)[:, :, 0, :]
    return out, (arg, x.shape, window)


def maxpool1d_backward(dout, cache):
    arg, shape, window = cache
    b, t, c = shape
    dx = np.zeros((b, t // window, window, c))
    np.put_along_axis(dx, arg[:, :, None, :], dout[:, :, None, :], axis=2)
    return dx.reshape(shape)


def maxpool1d(x, window=2):
    out, _ = maxpool1d_forward(np.asarray(x, dtype=float)[None], window)
    return out[0]


def relu_forward(x):
    return np.maximum(x, 0.0), x > 0


def relu_backward(dout, mask):
    return dout * mask


def dense_forward(x, w, b):
    return x @ w + b, x


def dense_backward(dout, x, w):
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)
