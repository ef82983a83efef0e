"""Shared numeric plumbing for the hand-rolled networks.

Everything runs in float64 so that central-difference gradient checks are
meaningful. All randomness flows through explicitly seeded generators; a
(seed, stream) pair always produces the same draws.
"""

from __future__ import annotations

import numpy as np

from .errors import NonFiniteLoss

# Fixed stream ids so independent consumers of one master seed never collide.
STREAM_VAE_INIT = 0
STREAM_VAE_NOISE = 1
STREAM_VAE_SHUFFLE = 2
STREAM_QNET_INIT = 3
STREAM_ACTION = 4
STREAM_REPLAY = 5
STREAM_SYNTH = 6
STREAM_EPOCH_SHUFFLE = 7


def rng_for(seed: int, stream: int) -> np.random.Generator:
    """Deterministic child generator for (seed, stream)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), int(stream))))


def xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    scale = np.sqrt(2.0 / (fan_in + fan_out))
    return rng.normal(0.0, scale, size=(fan_in, fan_out))


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign to avoid overflow in exp.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def check_finite(value: float, context: str) -> float:
    if not np.isfinite(value):
        raise NonFiniteLoss(f"non-finite value in {context}: {value!r}")
    return float(value)


class Adam:
    """Plain Adam over a dict of parameter arrays.

    State is keyed by parameter name, so the same optimizer instance must be
    reused across steps for the moment estimates to mean anything.
    """

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self._m.setdefault(name, np.zeros_like(p))
            v = self._v.setdefault(name, np.zeros_like(p))
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)
