from __future__ import annotations

import numpy as np


def rmsprop_init(params: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in params.items()}


def rmsprop_step(params: dict, grads: dict, state: dict, lr=1e-4, rho=0.9, eps=1e-8):
    """One RMSprop update, in place: ``s = rho s + (1 - rho) g^2``, ``p -= lr g / (sqrt(s) + eps)``.

    Returns ``(params, state)`` for convenience.
    """
    for k, p in params.items():
        g = grads[k]
        s = state[k]
        if s.shape != p.shape:
            raise ValueError(f"optimizer state for {k} has shape {s.shape}, parameter {p.shape}")
        s *= rho
        s += (1.0 - rho) * g * g
        p -= lr * g / (np.sqrt(s) + eps)
    return params, state
