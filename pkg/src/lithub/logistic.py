"""Shared logistic-regression core: full-batch gradient descent, zero init.

Deterministic by construction (no random initialization, fixed iteration
order), so retraining from the same data reproduces bit-identical weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteLoss, SingleClassDataset
from .text import FeatureVector


@dataclass
class Hyper:
    learning_rate: float = 0.5
    epochs: int = 300
    l2: float = 1e-3

    def validate(self) -> None:
        if self.learning_rate <= 0 or self.epochs <= 0 or self.l2 < 0:
            raise ValueError("hyperparameters must be positive (l2 may be 0)")

    def as_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "l2": self.l2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hyper":
        return cls(**d)


@dataclass
class TrainResult:
    weights: np.ndarray
    bias: float
    losses: list[float] = field(default_factory=list)


def features_to_matrix(vectors: list[FeatureVector], dim: int) -> np.ndarray:
    X = np.zeros((len(vectors), dim))
    for row, fv in enumerate(vectors):
        for idx, weight in fv.items():
            X[row, idx] = weight
    return X


def sigmoid(z):
    # Stable in both tails.
    scalar = np.isscalar(z) or getattr(z, "ndim", 0) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return float(out[0]) if scalar else out


def log_loss_l2(
    weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, l2: float
) -> float:
    """Mean cross-entropy plus 0.5 * l2 * ||w||^2 (bias unregularized)."""
    with np.errstate(over="ignore", invalid="ignore"):  # divergence -> inf, caught upstream
        z = X @ weights + bias
        ce = np.mean(np.logaddexp(0.0, z) - y * z)
        return float(ce + 0.5 * l2 * weights @ weights)


def loss_gradient(
    weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[np.ndarray, float]:
    residual = (sigmoid(X @ weights + bias) - y) / len(y)
    return X.T @ residual + l2 * weights, float(residual.sum())


def train_logistic(X: np.ndarray, y: np.ndarray, hyper: Hyper | None = None) -> TrainResult:
    """L2-regularized logistic regression via full-batch gradient descent.

    Raises SingleClassDataset when y is constant and NonFiniteLoss when the
    learning rate makes the loss diverge.
    """
    hyper = hyper or Hyper()
    hyper.validate()
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise SingleClassDataset("training data contains a single class")
    weights = np.zeros(X.shape[1])
    bias = 0.0
    losses = [log_loss_l2(weights, bias, X, y, hyper.l2)]
    for _ in range(hyper.epochs):
        grad_w, grad_b = loss_gradient(weights, bias, X, y, hyper.l2)
        weights -= hyper.learning_rate * grad_w
        bias -= hyper.learning_rate * grad_b
        loss = log_loss_l2(weights, bias, X, y, hyper.l2)
        if not np.isfinite(loss):
            raise NonFiniteLoss("training diverged; lower the learning rate")
        losses.append(loss)
    return TrainResult(weights=weights, bias=bias, losses=losses)


def predict_proba(X: np.ndarray, weights: np.ndarray, bias: float) -> np.ndarray:
    return sigmoid(X @ weights + bias)
