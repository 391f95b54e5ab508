"""Value networks: fully connected MLPs with LeakyReLU hiddens and a
tanh output layer, trained by plain SGD on the squared TD error.

Gradients are computed analytically (verified against central finite
differences in the test suite).  Weights serialize to a flat
little-endian float32 file plus a JSON sidecar with shapes and config.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .rng import SeededRng

LEAKY_SLOPE = 0.01
MASKED_SCORE = -2.0  # below the tanh range, so masked actions never win


@dataclass
class QNetwork:
    sizes: list
    weights: list  # W[i]: (sizes[i+1], sizes[i])
    biases: list

    @property
    def n_actions(self):
        return self.sizes[-1]

    def copy(self):
        return QNetwork(
            sizes=list(self.sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def load_from(self, other):
        for w, ow in zip(self.weights, other.weights):
            w[:] = ow
        for b, ob in zip(self.biases, other.biases):
            b[:] = ob


def init_network(sizes, rng: SeededRng) -> QNetwork:
    """Glorot-uniform init drawn from the engine PRNG, row-major order."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        w = np.array(
            [[rng.uniform(-limit, limit) for _ in range(fan_in)] for _ in range(fan_out)]
        )
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return QNetwork(sizes=list(sizes), weights=weights, biases=biases)


def leaky_relu(z):
    return np.where(z > 0.0, z, LEAKY_SLOPE * z)


def _forward_full(net: QNetwork, x):
    """Returns (pre-activations, activations); activations[0] is the input."""
    zs, acts = [], [x]
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        zs.append(z)
        h = np.tanh(z) if i == last else leaky_relu(z)
        acts.append(h)
    return zs, acts


def forward(net: QNetwork, x):
    """Batched forward pass; accepts (d,) or (n, d)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != net.sizes[0]:
        raise DimensionMismatch(
            f"state has dim {x.shape[1]}, network expects {net.sizes[0]}"
        )
    _, acts = _forward_full(net, x)
    out = acts[-1]
    return out[0] if single else out


def q_values(net: QNetwork, state, mask=None):
    """Action scores with masked actions forced to MASKED_SCORE."""
    q = forward(net, state).copy()
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape[0] != net.n_actions:
            raise DimensionMismatch(
                f"mask has {mask.shape[0]} entries, network has {net.n_actions} actions"
            )
        q[..., mask] = MASKED_SCORE
    return q


def loss_and_grads(net: QNetwork, states, actions, targets):
    """Mean squared TD error on the chosen actions, with gradients."""
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.float64)
    n = states.shape[0]
    zs, acts = _forward_full(net, states)
    out = acts[-1]
    picked = out[np.arange(n), actions]
    diff = picked - targets
    loss = float((diff ** 2).mean())

    d_out = np.zeros_like(out)
    d_out[np.arange(n), actions] = 2.0 * diff / n
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    last = len(net.weights) - 1
    delta = d_out * (1.0 - out ** 2)  # tanh'
    for i in range(last, -1, -1):
        grads_w[i] = delta.T @ acts[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            upstream = delta @ net.weights[i]
            delta = upstream * np.where(zs[i - 1] > 0.0, 1.0, LEAKY_SLOPE)
    return loss, grads_w, grads_b


def sgd_step(net: QNetwork, grads_w, grads_b, lr):
    for w, gw in zip(net.weights, grads_w):
        w -= lr * gw
    for b, gb in zip(net.biases, grads_b):
        b -= lr * gb


def save_network(net: QNetwork, path, meta=None):
    """Flat little-endian float32: per layer, W row-major then bias."""
    chunks = []
    for w, b in zip(net.weights, net.biases):
        chunks.append(w.astype("<f4").tobytes(order="C"))
        chunks.append(b.astype("<f4").tobytes(order="C"))
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))
    sidecar = {
        "sizes": list(net.sizes),
        "hidden_activation": "leaky_relu",
        "leaky_slope": LEAKY_SLOPE,
        "output_activation": "tanh",
        "dtype": "<f4",
    }
    if meta:
        sidecar.update(meta)
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_network(path) -> QNetwork:
    with open(path + ".json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    sizes = sidecar["sizes"]
    raw = np.fromfile(path, dtype="<f4").astype(np.float64)
    weights, biases = [], []
    offset = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = raw[offset:offset + fan_in * fan_out].reshape(fan_out, fan_in)
        offset += fan_in * fan_out
        b = raw[offset:offset + fan_out]
        offset += fan_out
        weights.append(w.copy())
        biases.append(b.copy())
    if offset != raw.size:
        raise DimensionMismatch(f"{path} holds {raw.size} floats, expected {offset}")
    return QNetwork(sizes=list(sizes), weights=weights, biases=biases)
