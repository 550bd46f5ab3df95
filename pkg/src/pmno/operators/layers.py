"""Dense stacks with optional coordinate-jet propagation."""
from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..errors import ConfigError
from ..tensor import Tensor


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape or (fan_in, fan_out))


def activation_jet(name: str, z: Tensor):
    """Return (s, s', s'') for the activation evaluated at ``z``."""
    name = name.lower()
    if name == "tanh":
        s = T.tanh(z)
        s1 = 1.0 - s * s
        return s, s1, -2.0 * s * s1
    if name == "sin":
        s = T.sin(z)
        return s, T.cos(z), -s
    if name == "identity":
        return z, None, None
    raise ConfigError(f"activation {name!r} has no coordinate-jet rule")


class DenseStack:
    """``widths = [in, h1, ..., out]``; activation between layers, none after the last."""

    def __init__(self, widths, activation: str, rng: np.random.Generator, prefix: str = "dense"):
        if len(widths) < 2:
            raise ConfigError("a dense stack needs at least input and output widths")
        T.activation(activation)
        self.widths = list(widths)
        self.activation = activation
        self.weights = []
        self.biases = []
        for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
            self.weights.append(Tensor(xavier_uniform(rng, a, b), requires_grad=True, name=f"{prefix}.{i}.w"))
            self.biases.append(Tensor(np.zeros(b), requires_grad=True, name=f"{prefix}.{i}.b"))

    def named_parameters(self) -> dict[str, Tensor]:
        out = {}
        for w, b in zip(self.weights, self.biases):
            out[w.name] = w
            out[b.name] = b
        return out

    def __call__(self, x) -> Tensor:
        act = T.activation(self.activation)
        n = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = T.linear(x, w, b)
            if i < n - 1:
                x = act(x)
        return x

    def jet(self, jet_in) -> Tensor:
        """Propagate a (5, N, in) coordinate jet [value, d/dx, d/dy, d2/dx2, d2/dy2]."""
        e0 = np.zeros((5, 1, 1))
        e0[0] = 1.0
        z = T.as_tensor(jet_in)
        n = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = T.linear(z, w) + T.reshape(b, (1, 1, -1)) * e0
            if i < n - 1:
                z = _activate_jet(self.activation, z)
        return z


def _activate_jet(name: str, z: Tensor) -> Tensor:
    val, zx, zy, zxx, zyy = (z[i] for i in range(5))
    s, s1, s2 = activation_jet(name, val)
    if s1 is None:
        return z
    return T.stack([s, s1 * zx, s1 * zy, s2 * zx * zx + s1 * zxx, s2 * zy * zy + s1 * zyy], axis=0)
