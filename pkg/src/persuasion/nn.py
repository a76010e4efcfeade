"""Small dense-network building blocks shared by the classifier heads.

Everything is float64 numpy; training loops stay single-threaded and draw
all randomness (init and batch order) from one seeded Generator so runs
are bitwise reproducible.
"""
from __future__ import annotations

import numpy as np

from .errors import NonFiniteActivation

PROB_CLAMP = 1e-12


def glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax (also accepts a single vector)."""
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def bce(prob, target) -> np.ndarray:
    """Elementwise binary cross-entropy with probability clamping."""
    p = np.clip(prob, PROB_CLAMP, 1.0 - PROB_CLAMP)
    t = np.asarray(target, dtype=np.float64)
    return -(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))


def check_finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFiniteActivation(f"non-finite values in {what}")
    return x


def batch_indices(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Seeded shuffled mini-batch index lists covering 0..n-1 once."""
    order = rng.permutation(n)
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]
