"""Small dense networks with hand-written reverse-mode gradients.

Everything is float64 numpy. Parameters are flat lists of arrays
(W0, b0, W1, b1, ...), which keeps optimizers and checkpointing generic.
"""

from __future__ import annotations

import numpy as np

__all__ = ["MLP", "global_norm", "clip_by_global_norm", "SGD", "Adam"]


class MLP:
    """Fully connected net with tanh hidden activations and a linear output."""

    def __init__(self, sizes, rng: np.random.Generator, out_scale: float = 1.0):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        self.params: list[np.ndarray] = []
        last = len(sizes) - 2
        for k, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            scale = (out_scale if k == last else 1.0) / np.sqrt(n_in)
            self.params.append(rng.standard_normal((n_in, n_out)) * scale)
            self.params.append(np.zeros(n_out))

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.forward_cache(x)[0]

    def forward_cache(self, x: np.ndarray):
        """Forward pass keeping the activations needed for backward()."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"input width {x.shape[1]} != expected {self.sizes[0]}")
        activations = [x]
        h = x
        for k in range(self.n_layers):
            W, b = self.params[2 * k], self.params[2 * k + 1]
            z = h @ W + b
            h = np.tanh(z) if k < self.n_layers - 1 else z
            activations.append(h)
        return h, activations

    def backward(self, activations, grad_out: np.ndarray):
        """Gradients of sum(grad_out * output) w.r.t. params and input.

        Returns (param grads in self.params order, gradient w.r.t. input).
        """
        grads = [None] * len(self.params)
        g = np.atleast_2d(np.asarray(grad_out, dtype=float))
        for k in range(self.n_layers - 1, -1, -1):
            W = self.params[2 * k]
            h_in, h_out = activations[k], activations[k + 1]
            if k < self.n_layers - 1:
                g = g * (1.0 - h_out * h_out)  # through tanh
            grads[2 * k] = h_in.T @ g
            grads[2 * k + 1] = g.sum(axis=0)
            g = g @ W.T
        return grads, g

    def copy(self) -> "MLP":
        clone = object.__new__(MLP)
        clone.sizes = self.sizes
        clone.params = [p.copy() for p in self.params]
        return clone


def global_norm(arrays) -> float:
    return float(np.sqrt(sum(float((a * a).sum()) for a in arrays)))


def clip_by_global_norm(grads, max_norm: float):
    """Scale the whole gradient list down to max_norm; max_norm <= 0 disables."""
    norm = global_norm(grads)
    if max_norm <= 0 or norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    return [g * scale for g in grads], norm


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params, grads) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self._m = None
        self._v = None
        self._t = 0

    def step(self, params, grads) -> None:
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self._t += 1
        b1, b2 = self.beta1, self.beta2
        correction = np.sqrt(1.0 - b2**self._t) / (1.0 - b1**self._t)
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * correction * m / (np.sqrt(v) + self.eps)
