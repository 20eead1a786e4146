"""Soft-margin linear SVM trained in the dual.

Solves  min_w,b  (1/2)||w||^2 + C * sum_i hinge(y_i (w.x_i + b))  via its
dual QP with an SMO-style maximal-violating-pair method: two multipliers are
updated per step so the bias equality constraint sum_i alpha_i y_i = 0 stays
satisfied exactly.  The intercept is then set by exact 1-D minimization of
the hinge sum given w (the primal is piecewise linear in b), taking the
midpoint of the optimal flat interval for determinism.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericalError
from .base import LinearModel, SvmSpec, TrainedModel, constant_fallback


def optimal_bias(z: np.ndarray, y: np.ndarray, C: float) -> float:
    """Exact argmin_b of C * sum_i max(0, 1 - y_i (z_i + b)).

    The objective is convex piecewise linear with breakpoints b_i = y_i - z_i;
    evaluate at the breakpoints and return the midpoint of the argmin set.
    """
    bp = np.unique(y - z)
    objs = np.array([np.maximum(0.0, 1.0 - y * (z + b)).sum() for b in bp])
    lo = objs.min()
    flat = bp[objs <= lo + 1e-12]
    return float(0.5 * (flat[0] + flat[-1]))


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int) -> np.ndarray:
    n = K.shape[0]
    Q = (y[:, None] * y[None, :]) * K
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of (1/2) a'Qa - 1'a at a = 0
    eps = 1e-14
    for _ in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (alpha < C - eps)) | ((y < 0) & (alpha > eps))
        lo = ((y < 0) & (alpha < C - eps)) | ((y > 0) & (alpha > eps))
        if not up.any() or not lo.any():
            break
        i = np.where(up)[0][np.argmax(yg[up])]
        j = np.where(lo)[0][np.argmin(yg[lo])]
        violation = yg[i] - yg[j]
        if violation < tol:
            break
        quad = max(K[i, i] + K[j, j] - 2.0 * K[i, j], 1e-12)
        t = violation / quad
        # keep both multipliers inside [0, C]
        t = min(t, (C - alpha[i]) if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else (C - alpha[j]))
        if t <= 0:
            break
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        grad += Q[:, i] * (y[i] * t) - Q[:, j] * (y[j] * t)
    else:
        raise NumericalError("SVM dual solver hit its iteration cap")
    return alpha


def train_svm(X: np.ndarray, y: np.ndarray, spec: SvmSpec = SvmSpec()) -> TrainedModel:
    """Fit the linear SVM; single-class input yields a flagged constant model."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int).ravel()
    if spec.kernel != "linear":
        raise NumericalError(f"only the linear kernel is supported, got {spec.kernel!r}")
    if len(np.unique(y)) < 2:
        return constant_fallback(y, spec, None, X.shape[1])
    y_pm = 2.0 * y - 1.0
    K = X @ X.T
    alpha = _smo(K, y_pm, spec.C, spec.dual_tol, spec.max_iter)
    w = (alpha * y_pm) @ X
    b = optimal_bias(X @ w, y_pm, spec.C)
    return TrainedModel(kind="svm", spec=spec, model=LinearModel(w, b), dim=X.shape[1])


def primal_objective(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, C: float) -> float:
    """(1/2)||w||^2 + C * sum hinge, with y in {0,1} recoded internally."""
    y_pm = 2.0 * np.asarray(y, dtype=float).ravel() - 1.0
    margins = y_pm * (np.asarray(X, dtype=float) @ w + b)
    return float(0.5 * w @ w + C * np.maximum(0.0, 1.0 - margins).sum())
