"""Gaussian-process model of the reward-prediction residual."""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

BETA = 0.25


@dataclass(frozen=True)
class GPModel:
    """Exact GP regression with a squared-exponential kernel.

    Actions live in the unit cube. ``chol`` is the lower Cholesky factor of
    K + noise_var I and ``weights`` solves that system for the residuals;
    both are rebuilt by :func:`gp_fit`.
    """

    lengthscale: float = 0.2
    signal_var: float = 1.0
    noise_var: float = 1e-4
    actions: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    chol: np.ndarray = None
    weights: np.ndarray = None

    def __post_init__(self):
        if not (self.lengthscale > 0 and self.signal_var > 0 and self.noise_var >= 0):
            raise ValueError("GP hyperparameters must be positive")

    def __len__(self):
        return len(self.residuals)

    def kernel(self, a, b):
        a, b = np.atleast_2d(a), np.atleast_2d(b)
        sq = np.sum(a * a, 1)[:, None] + np.sum(b * b, 1)[None, :] - 2.0 * a @ b.T
        return self.signal_var * np.exp(-0.5 * np.maximum(sq, 0.0) / self.lengthscale ** 2)


def gp_fit(model, actions, residuals):
    """Refit ``model`` on all (action, residual) pairs; empty data gives the prior."""
    residuals = np.asarray(residuals, dtype=float).ravel()
    n = len(residuals)
    actions = np.asarray(actions, dtype=float)
    if actions.size == 0:
        actions = np.zeros((0, 0))
    elif actions.ndim == 1:
        actions = actions.reshape(len(actions), -1)
    if actions.ndim != 2 or len(actions) != n:
        raise ValueError("actions and residuals differ in length")
    if not (np.all(np.isfinite(actions)) and np.all(np.isfinite(residuals))):
        raise ValueError("non-finite GP training data")
    if n == 0:
        return replace(model, actions=actions, residuals=residuals, chol=None, weights=None)
    gram = model.kernel(actions, actions) + model.noise_var * np.eye(n)
    try:
        chol = linalg.cholesky(gram, lower=True)
    except linalg.LinAlgError:
        raise ValueError("GP kernel matrix is singular; use a positive noise variance") from None
    weights = linalg.cho_solve((chol, True), residuals)
    return replace(model, actions=actions, residuals=residuals, chol=chol, weights=weights)


def gp_posterior(model, action):
    """Predictive (mean, std) of the latent residual at ``action``."""
    x = np.asarray(action, dtype=float).ravel()
    if len(model) == 0:
        return 0.0, float(np.sqrt(model.signal_var))
    if x.size != model.actions.shape[1]:
        raise ValueError(f"action has {x.size} components, GP was fit on {model.actions.shape[1]}")
    k = model.kernel(model.actions, x)[:, 0]
    mean = float(k @ model.weights)
    v = linalg.solve_triangular(model.chol, k, lower=True)
    var = model.signal_var - float(v @ v)
    return mean, float(np.sqrt(max(var, 0.0)))


def ucb_correct(model, action, rv, beta=BETA):
    """Reward corrected by the GP: rv + mean + sqrt(beta) std."""
    mean, std = gp_posterior(model, action)
    if beta == 0:
        return rv + mean
    return rv + mean + np.sqrt(beta) * std
