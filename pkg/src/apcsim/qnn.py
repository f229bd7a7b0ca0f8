"""Fixed-topology Q-network: forward, exact backprop, semi-gradient updates.

Plain numpy throughout, no ML framework. The network is a stack of fully
connected layers with ReLU on every hidden layer and a linear output pair
(Q(s, wait), Q(s, contend)). Parameters are 64-bit reals; the gradient-check
tolerance in the tests depends on that.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

# input 41 = interleaved (action, observation) history of depth 20 plus the
# normalized contender count; hidden 4x64 ReLU; linear 2-wide output
DEFAULT_DIMS = (41, 64, 64, 64, 64, 2)


class DivergenceError(RuntimeError):
    """Raised when a training step produces a non-finite loss."""


class QnnParams:
    """Weights and biases of one Q-network. A plain value object: copy to share."""

    __slots__ = ("weights", "biases")

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        self.weights = weights
        self.biases = biases

    @classmethod
    def init(cls, rng: np.random.Generator, dims: tuple[int, ...] = DEFAULT_DIMS) -> "QnnParams":
        """Fan-in-scaled uniform init: W ~ U(-1, 1)/sqrt(fan_in), zero biases."""
        weights = [
            rng.uniform(-1.0, 1.0, size=(dims[i], dims[i + 1])) / np.sqrt(dims[i])
            for i in range(len(dims) - 1)
        ]
        biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
        return cls(weights, biases)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self) -> "QnnParams":
        return QnnParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def to_bytes(self) -> bytes:
        """Flat little-endian float64 snapshot with a shape header."""
        dims = self.dims
        header = struct.pack("<4sI", b"QNN1", len(dims)) + struct.pack(
            f"<{len(dims)}I", *dims
        )
        chunks = [header]
        for w in self.weights:
            chunks.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        for b in self.biases:
            chunks.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
        return b"".join(chunks)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "QnnParams":
        magic, n_dims = struct.unpack_from("<4sI", blob, 0)
        if magic != b"QNN1":
            raise ValueError("not a QNN parameter snapshot")
        dims = struct.unpack_from(f"<{n_dims}I", blob, 8)
        offset = 8 + 4 * n_dims
        weights, biases = [], []
        for i in range(n_dims - 1):
            size = dims[i] * dims[i + 1]
            w = np.frombuffer(blob, dtype="<f8", count=size, offset=offset)
            weights.append(w.reshape(dims[i], dims[i + 1]).astype(np.float64))
            offset += size * 8
        for i in range(n_dims - 1):
            b = np.frombuffer(blob, dtype="<f8", count=dims[i + 1], offset=offset)
            biases.append(b.astype(np.float64))
            offset += dims[i + 1] * 8
        return cls(weights, biases)


@dataclass
class GradientSet:
    """d(loss)/d(params), shape-congruent with its QnnParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


def forward(params: QnnParams, x: np.ndarray) -> np.ndarray:
    """Q-values for one state vector; returns array (q_wait, q_contend)."""
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite network input")
    h = x
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if i < last:
            np.maximum(h, 0.0, out=h)
    return h


def forward_batch(params: QnnParams, x: np.ndarray) -> np.ndarray:
    """Q-values for a (B, in) batch; same composition as forward."""
    return forward(params, x)


def _forward_cached(params: QnnParams, x: np.ndarray) -> list[np.ndarray]:
    """Forward pass keeping every layer's activation (input included)."""
    acts = [x]
    h = x
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if i < last:
            np.maximum(h, 0.0, out=h)
        acts.append(h)
    return acts


def _backward(params: QnnParams, acts: list[np.ndarray], dout: np.ndarray) -> GradientSet:
    """Backprop dout (B, out) through cached activations; returns summed grads."""
    gw = [None] * params.n_layers
    gb = [None] * params.n_layers
    delta = dout
    for i in range(params.n_layers - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ params.weights[i].T
            delta[acts[i] <= 0.0] = 0.0  # ReLU mask of the producing layer
    return GradientSet(gw, gb)


def target_value(reward: float, next_q: np.ndarray, gamma: float) -> float:
    """Bootstrap target v = r + gamma * max_a' Q(s', a')."""
    return float(reward + gamma * np.max(next_q))


def q_gradient(params: QnnParams, state: np.ndarray, action: int) -> tuple[float, GradientSet]:
    """Q(s, a) and its exact gradient with respect to every parameter."""
    acts = _forward_cached(params, state.reshape(1, -1))
    q = float(acts[-1][0, action])
    dout = np.zeros((1, acts[-1].shape[1]))
    dout[0, action] = 1.0
    return q, _backward(params, acts, dout)


def semi_gradient_update(
    params: QnnParams,
    states: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    next_states: np.ndarray,
    rho: float,
    gamma: float,
) -> float:
    """One SGD step theta += rho * mean((v - Q) * grad Q), v held fixed.

    The target v = r + gamma * max Q(s') is a constant during differentiation
    (semi-gradient), so only the Q(s, a) branch is backpropagated. Mutates
    params in place and returns the mean squared TD error.
    """
    batch = states.shape[0]
    if batch == 0:
        raise ValueError("empty batch")
    next_q = forward(params, next_states)
    v = rewards + gamma * next_q.max(axis=1)
    acts = _forward_cached(params, states)
    rows = np.arange(batch)
    td = v - acts[-1][rows, actions]
    loss = float(np.mean(td * td))
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite TD loss {loss}")
    dout = np.zeros_like(acts[-1])
    dout[rows, actions] = td / batch
    grads = _backward(params, acts, dout)
    for w, gw in zip(params.weights, grads.weights):
        w += rho * gw
    for b, gb in zip(params.biases, grads.biases):
        b += rho * gb
    return loss


def average_params(params_list: list[QnnParams]) -> QnnParams:
    """Element-wise arithmetic mean of shape-congruent parameter sets."""
    if not params_list:
        raise ValueError("nothing to average")
    first = params_list[0]
    for other in params_list[1:]:
        if other.dims != first.dims:
            raise ValueError("shape mismatch in average_params")
    weights = [
        np.mean([p.weights[i] for p in params_list], axis=0)
        for i in range(first.n_layers)
    ]
    biases = [
        np.mean([p.biases[i] for p in params_list], axis=0)
        for i in range(first.n_layers)
    ]
    return QnnParams(weights, biases)
