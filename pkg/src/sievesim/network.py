"""Dense feed-forward ReLU networks with explicit NumPy gradients.

Kept deliberately small: the trainer in :mod:`sievesim.estimators` needs
forward evaluation, the mean-squared loss, and its exact gradient; tests
check the gradient against finite differences, so everything is plain
float64 arithmetic.
"""

from __future__ import annotations

import numpy as np

from ._random import as_generator


class ReluNetwork:
    """Multilayer perceptron with ReLU hidden activations and scalar output.

    Parameters are initialized uniformly on ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``
    per layer (biases included), from the given seed.
    """

    def __init__(self, layer_dims, seed=0):
        dims = [int(v) for v in layer_dims]
        if len(dims) < 2:
            raise ValueError("need at least input and output dimensions")
        if dims[-1] != 1:
            raise ValueError(f"output dimension must be 1, got {dims[-1]}")
        if any(v < 1 for v in dims):
            raise ValueError(f"layer dimensions must be positive, got {dims}")
        rng = as_generator(seed)
        self.layer_dims = dims
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, fan_out))

    @property
    def params(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order: W1, b1, W2, b2, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params)

    def param_vector(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_param_vector(self, vec) -> None:
        vec = np.asarray(vec, dtype=float).ravel()
        if vec.size != self.num_params:
            raise ValueError(f"expected {self.num_params} parameters, got {vec.size}")
        at = 0
        for p in self.params:
            p.flat[:] = vec[at : at + p.size]
            at += p.size

    def forward(self, x) -> np.ndarray:
        a = np.asarray(x, dtype=float)
        if a.ndim == 1:
            a = a[None, :]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ w + b, 0.0)
        return (a @ self.weights[-1] + self.biases[-1]).ravel()

    def loss(self, x, y) -> float:
        resid = self.forward(x) - np.asarray(y, dtype=float).ravel()
        return float(np.mean(resid**2))

    def loss_and_grad(self, x, y):
        """Mean squared loss and its gradient, ordered like ``params``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        n = x.shape[0]

        activations = [x]
        pre = []
        a = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ w + b
            pre.append(z)
            a = np.maximum(z, 0.0)
            activations.append(a)
        resid = (a @ self.weights[-1] + self.biases[-1]).ravel() - y
        loss = float(np.mean(resid**2))

        upstream = (2.0 / n) * resid[:, None]
        grads_w = [activations[-1].T @ upstream]
        grads_b = [upstream.sum(axis=0)]
        back = upstream @ self.weights[-1].T
        for layer in range(len(self.weights) - 2, -1, -1):
            back = back * (pre[layer] > 0.0)
            grads_w.append(activations[layer].T @ back)
            grads_b.append(back.sum(axis=0))
            back = back @ self.weights[layer].T
        grads_w.reverse()
        grads_b.reverse()

        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads.append(gw)
            grads.append(gb)
        return loss, grads
