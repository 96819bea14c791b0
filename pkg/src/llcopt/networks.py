"""Dense tanh networks with hand-written backpropagation and Adam.

Everything is plain float64 numpy.  An Mlp caches the activations of its
last forward pass; backward() consumes an upstream gradient of the same
batch shape, fills per-parameter gradients and returns the gradient with
respect to the input batch.
"""

from __future__ import annotations

import math

import numpy as np


def orthogonal(rng: np.random.Generator, shape: tuple[int, int], gain: float = 1.0) -> np.ndarray:
    """Orthogonal weight matrix scaled by gain."""
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diagonal(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


class Mlp:
    """Fully connected network, tanh on hidden layers, linear head."""

    def __init__(
        self,
        dims: tuple[int, ...],
        rng: np.random.Generator,
        hidden_gain: float = math.sqrt(2.0),
        head_gain: float = 1.0,
    ) -> None:
        if len(dims) < 2:
            raise ValueError(f"need at least input and output dims, got {dims!r}")
        self.dims = tuple(int(d) for d in dims)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        n_layers = len(dims) - 1
        for i, (n_in, n_out) in enumerate(zip(dims[:-1], dims[1:])):
            gain = head_gain if i == n_layers - 1 else hidden_gain
            self.weights.append(orthogonal(rng, (n_in, n_out), gain))
            self.biases.append(np.zeros(n_out))
        self.grad_weights = [np.zeros_like(w) for w in self.weights]
        self.grad_biases = [np.zeros_like(b) for b in self.biases]
        self._acts: list[np.ndarray] | None = None

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def gradients(self) -> list[np.ndarray]:
        out = []
        for gw, gb in zip(self.grad_weights, self.grad_biases):
            out.extend((gw, gb))
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        acts = [x]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            acts.append(z if i == self.n_layers - 1 else np.tanh(z))
        self._acts = acts
        return acts[-1]

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        """Backpropagate dL/d(output); returns dL/d(input)."""
        if self._acts is None:
            raise RuntimeError("backward() before forward()")
        acts = self._acts
        g = np.atleast_2d(np.asarray(grad_out, dtype=float))
        for i in range(self.n_layers - 1, -1, -1):
            if i != self.n_layers - 1:
                g = g * (1.0 - acts[i + 1] ** 2)
            self.grad_weights[i][...] = acts[i].T @ g
            self.grad_biases[i][...] = g.sum(axis=0)
            g = g @ self.weights[i].T
        return g


class Adam:
    """Adam over a fixed list of parameter arrays, updated in place."""

    def __init__(
        self,
        params: list[np.ndarray],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError(f"expected {len(self.params)} gradients, got {len(grads)}")
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m[...] = self.beta1 * m + (1.0 - self.beta1) * g
            v[...] = self.beta2 * v + (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
