"""Gaussian process surrogate (RBF kernel) and expected improvement."""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

__all__ = ["GaussianProcess", "expected_improvement"]

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))


class GaussianProcess:
    """GP regression on inputs normalized to [0, 1]^d.

    Targets are standardized internally. Kernel hyperparameters (length
    scale, signal variance, noise variance) are fit by maximizing the log
    marginal likelihood with a derivative-free coordinate search over a
    log-spaced grid, which keeps the surrogate dependency-light and fully
    deterministic.
    """

    def __init__(self, length_scale: float = 0.3, signal_var: float = 1.0, noise_var: float = 1e-2):
        self.length_scale = length_scale
        self.signal_var = signal_var
        self.noise_var = noise_var
        self._X = None

    def fit(self, X: np.ndarray, y: np.ndarray, optimize: bool = True) -> "GaussianProcess":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).reshape(-1)
        if len(y) != X.shape[0]:
            raise ValueError("X and y lengths differ")
        self._y_mean = float(y.mean())
        self._y_std = float(y.std()) or 1.0
        self._X = X
        self._y = (y - self._y_mean) / self._y_std
        if optimize and len(y) >= 3:
            self._optimize_kernel()
        self._factorize()
        return self

    def predict(self, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at query points, in target units."""
        if self._X is None:
            raise RuntimeError("predict() before fit()")
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        k = self._kernel(Xq, self._X)
        mean = k @ self._alpha
        v = np.linalg.solve(self._L, k.T)
        var = np.maximum(self.signal_var - np.sum(v * v, axis=0), 0.0)
        return mean * self._y_std + self._y_mean, np.sqrt(var) * self._y_std

    def log_marginal_likelihood(self) -> float:
        n = len(self._y)
        return float(
            -0.5 * self._y @ self._alpha
            - np.log(np.diag(self._L)).sum()
            - 0.5 * n * np.log(2.0 * np.pi)
        )

    # internals

    def _kernel(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        sq = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1)
        return self.signal_var * np.exp(-0.5 * sq / self.length_scale**2)

    def _factorize(self) -> None:
        K = self._kernel(self._X, self._X)
        K[np.diag_indices_from(K)] += self.noise_var + 1e-10
        self._L = np.linalg.cholesky(K)
        self._alpha = np.linalg.solve(self._L.T, np.linalg.solve(self._L, self._y))

    def _optimize_kernel(self) -> None:
        grids = {
            "length_scale": np.logspace(-1.5, 0.5, 9),
            "signal_var": np.logspace(-1.0, 1.0, 7),
            "noise_var": np.logspace(-6.0, 0.0, 9),
        }
        for _sweep in range(2):
            for name, grid in grids.items():
                best_value, best_lml = getattr(self, name), -np.inf
                for value in grid:
                    setattr(self, name, float(value))
                    try:
                        self._factorize()
                    except np.linalg.LinAlgError:
                        continue
                    lml = self.log_marginal_likelihood()
                    if lml > best_lml:
                        best_lml, best_value = lml, float(value)
                setattr(self, name, best_value)


def expected_improvement(surrogate: GaussianProcess, points: np.ndarray, best_so_far: float) -> np.ndarray:
    """EI for maximization: (mu - best) * Phi(z) + sigma * phi(z), z = (mu - best) / sigma.

    Degenerate posteriors (sigma == 0) contribute max(mu - best, 0).
    """
    mean, std = surrogate.predict(points)
    improvement = mean - best_so_far
    ei = np.maximum(improvement, 0.0)
    positive = std > 0
    z = improvement[positive] / std[positive]
    ei[positive] = improvement[positive] * ndtr(z) + std[positive] * np.exp(-0.5 * z * z) / _SQRT_2PI
    return ei
