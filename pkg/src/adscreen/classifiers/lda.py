"""Linear discriminant analysis solved through an SVD pseudo-inverse.

Shared-covariance Gaussian classes give the linear rule
w = Sigma_w^+ (mu_1 - mu_0),  b = -(1/2)(mu_0 + mu_1) . w + log(pi_1 / pi_0),
where Sigma_w is the pooled within-class covariance (divisor n) and ^+ the
pseudo-inverse with a relative singular-value cutoff, so singular pooled
covariances (duplicated columns, n < dim) degrade deterministically instead
of failing.
"""

from __future__ import annotations

import numpy as np

from .base import LdaSpec, LinearModel, TrainedModel, constant_fallback


def pooled_covariance(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    cov = np.zeros((X.shape[1], X.shape[1]))
    for cls in (0, 1):
        Xc = X[y == cls]
        centered = Xc - Xc.mean(axis=0)
        cov += centered.T @ centered
    return cov / n


def _pinv_apply(X: np.ndarray, y: np.ndarray, delta: np.ndarray, rel_cutoff: float) -> np.ndarray:
    """Sigma_w^+ @ delta via the economy SVD of the within-class-centered rows.

    With Z the stacked centered rows, Sigma_w = Z'Z / n has eigenpairs
    (s_i^2/n, v_i) from Z = U diag(s) V', so the d x d decomposition is never
    formed; the cutoff stays relative to Sigma_w's largest singular value.
    """
    n = X.shape[0]
    Z = np.empty_like(X)
    for cls in (0, 1):
        Z[y == cls] = X[y == cls] - X[y == cls].mean(axis=0)
    _, s, Vt = np.linalg.svd(Z, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros_like(delta)
    eig = s**2 / n
    inv = np.where(eig > rel_cutoff * eig[0], 1.0 / np.where(eig > 0, eig, 1.0), 0.0)
    return Vt.T @ (inv * (Vt @ delta))


def train_lda(X: np.ndarray, y: np.ndarray, spec: LdaSpec = LdaSpec()) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int).ravel()
    if len(np.unique(y)) < 2:
        return constant_fallback(y, spec, None, X.shape[1])
    mu0 = X[y == 0].mean(axis=0)
    mu1 = X[y == 1].mean(axis=0)
    w = _pinv_apply(X, y, mu1 - mu0, spec.sv_cutoff)
    n1 = int((y == 1).sum())
    n0 = int((y == 0).sum())
    b = float(-0.5 * (mu0 + mu1) @ w + np.log(n1 / n0))
    return TrainedModel(kind="lda", spec=spec, model=LinearModel(w, b), dim=X.shape[1])
