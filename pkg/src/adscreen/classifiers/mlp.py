"""Single-hidden-layer MLP trained as one deterministic L-BFGS run.

Architecture: 256 ReLU units, logistic output.  Objective is mean
binary cross-entropy plus (alpha/2)(||W1||_F^2 + ||w2||^2); biases carry no
penalty.  Weights start Glorot-uniform from a caller-supplied seed and biases
start at zero, so a (data, seed) pair always reproduces the same model.
The BCE term is evaluated through logits (softplus identities), never through
a bare log(p), so extreme activations cannot produce log(0).
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from ..errors import NumericalError
from .base import MlpSpec, MLPModel, TrainedModel, constant_fallback


def _unpack(theta: np.ndarray, d: int, h: int):
    i = 0
    W1 = theta[i : i + h * d].reshape(h, d); i += h * d
    b1 = theta[i : i + h]; i += h
    w2 = theta[i : i + h]; i += h
    b2 = theta[i]
    return W1, b1, w2, b2


def _loss_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray, spec: MlpSpec):
    n, d = X.shape
    h = spec.hidden
    W1, b1, w2, b2 = _unpack(theta, d, h)

    Z1 = X @ W1.T + b1
    A1 = np.maximum(Z1, 0.0)
    z2 = A1 @ w2 + b2

    # mean softplus(z) - y z == mean BCE through logits
    data_loss = float(np.mean(np.logaddexp(0.0, z2) - y * z2))
    reg = 0.5 * spec.l2_alpha * (float((W1**2).sum()) + float((w2**2).sum()))
    loss = data_loss + reg

    dz2 = (expit(z2) - y) / n
    gw2 = A1.T @ dz2 + spec.l2_alpha * w2
    gb2 = float(dz2.sum())
    dZ1 = np.outer(dz2, w2)
    dZ1[Z1 <= 0.0] = 0.0
    gW1 = dZ1.T @ X + spec.l2_alpha * W1
    gb1 = dZ1.sum(axis=0)

    grad = np.concatenate([gW1.ravel(), gb1, gw2, [gb2]])
    if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
        raise NumericalError("non-finite MLP loss or gradient")
    return loss, grad


def glorot_init(d: int, h: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(6.0 / (d + h))
    lim2 = np.sqrt(6.0 / (h + 1))
    W1 = rng.uniform(-lim1, lim1, size=(h, d))
    w2 = rng.uniform(-lim2, lim2, size=h)
    return np.concatenate([W1.ravel(), np.zeros(h), w2, [0.0]])


def train_mlp(X: np.ndarray, y: np.ndarray, spec: MlpSpec = MlpSpec(), seed: int = 0) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if len(np.unique(y)) < 2:
        return constant_fallback(y.astype(int), spec, seed, X.shape[1])
    d, h = X.shape[1], spec.hidden

    theta0 = glorot_init(d, h, seed)
    init_loss, _ = _loss_grad(theta0, X, y, spec)
    res = minimize(
        _loss_grad, theta0, args=(X, y, spec), method="L-BFGS-B", jac=True,
        options={"maxcor": 10, "gtol": spec.grad_tol, "maxiter": spec.max_iters},
    )
    W1, b1, w2, b2 = _unpack(res.x, d, h)
    model = MLPModel(
        W1=W1, b1=b1, w2=w2, b2=float(b2), seed=seed,
        final_loss=float(res.fun), init_loss=float(init_loss),
    )
    return TrainedModel(kind="mlp", spec=spec, model=model, seed=seed, dim=d)


def predict_proba(model: MLPModel, X: np.ndarray) -> np.ndarray:
    A1 = np.maximum(np.atleast_2d(X) @ model.W1.T + model.b1, 0.0)
    z = A1 @ model.w2 + model.b2
    return expit(z)
