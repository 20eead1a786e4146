"""Gradient-boosted trees on logistic loss, 16 exact-greedy rounds.

Each round fits one depth-<=2 regression tree to the current gradients
g = p - y and Hessians h = p(1-p), starting from base logit 0.  Splits
enumerate every (feature, midpoint-between-distinct-values) pair and take
gain = 1/2 [G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam)] - gamma,
accepting only strictly positive gain; otherwise the node becomes a leaf
with weight -G/(H+lam).  Rounds with no admissible root split therefore
append single-leaf trees rather than failing.  Leaf weights are stored
unscaled; the learning rate eta multiplies them at prediction time (and in
the running training logits, so train and predict see the same ensemble).

Ties are broken deterministically: the scan runs features in index order and
thresholds in ascending order, and a candidate replaces the incumbent only
on strictly greater gain.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .base import TreeEnsembleModel, TreeNode, TrainedModel, XgbSpec


def _best_split(X: np.ndarray, g: np.ndarray, h: np.ndarray, spec: XgbSpec):
    """Highest-gain (feature, threshold, gain) over all midpoints, or None.

    All columns are scanned at once; the flattened feature-major argmax keeps
    the deterministic tie rule "lowest feature index, then lowest threshold".
    """
    n = X.shape[0]
    if n < 2:
        return None
    G, H = g.sum(), h.sum()
    parent = G * G / (H + spec.lam)
    order = np.argsort(X, axis=0, kind="stable")
    Xs = np.take_along_axis(X, order, axis=0)
    GL = np.cumsum(g[order], axis=0)[:-1]
    HL = np.cumsum(h[order], axis=0)[:-1]
    gains = 0.5 * (GL**2 / (HL + spec.lam) + (G - GL) ** 2 / (H - HL + spec.lam) - parent) - spec.gamma
    gains[Xs[:-1] >= Xs[1:]] = -np.inf  # no boundary between equal values
    k = int(np.argmax(gains.T))  # feature-major scan
    j, pos = divmod(k, n - 1)
    if not gains[pos, j] > 0.0:
        return None
    return float(gains[pos, j]), j, float((Xs[pos, j] + Xs[pos + 1, j]) / 2.0)


def _grow(X: np.ndarray, g: np.ndarray, h: np.ndarray, depth: int, spec: XgbSpec) -> TreeNode:
    if depth < spec.max_depth and X.shape[0] >= 2:
        found = _best_split(X, g, h, spec)
        if found is not None:
            _, j, thr = found
            mask = X[:, j] < thr
            return TreeNode(
                feature=j, threshold=thr,
                left=_grow(X[mask], g[mask], h[mask], depth + 1, spec),
                right=_grow(X[~mask], g[~mask], h[~mask], depth + 1, spec),
            )
    return TreeNode(weight=float(-g.sum() / (h.sum() + spec.lam)))


def _tree_values(node: TreeNode, X: np.ndarray) -> np.ndarray:
    if node.is_leaf:
        return np.full(X.shape[0], node.weight)
    out = np.empty(X.shape[0])
    mask = X[:, node.feature] < node.threshold
    out[mask] = _tree_values(node.left, X[mask])
    out[~mask] = _tree_values(node.right, X[~mask])
    return out


def train_xgb(X: np.ndarray, y: np.ndarray, spec: XgbSpec = XgbSpec()) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    logits = np.full(X.shape[0], 0.0)
    trees = []
    for _ in range(spec.rounds):
        p = expit(logits)
        g = p - y
        h = p * (1.0 - p)
        tree = _grow(X, g, h, 0, spec)
        trees.append(tree)
        logits = logits + spec.eta * _tree_values(tree, X)
    model = TreeEnsembleModel(trees=trees, eta=spec.eta, base_score_logit=0.0)
    return TrainedModel(kind="xgb", spec=spec, model=model, dim=X.shape[1])


def predict_logits(model: TreeEnsembleModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    logits = np.full(X.shape[0], model.base_score_logit)
    for tree in model.trees:
        logits = logits + model.eta * _tree_values(tree, X)
    return logits


def training_log_loss(model: TreeEnsembleModel, X: np.ndarray, y: np.ndarray) -> list:
    """Mean logistic loss after each round; used to monitor monotonicity."""
    y = np.asarray(y, dtype=float).ravel()
    logits = np.full(X.shape[0], model.base_score_logit)
    losses = []
    for tree in model.trees:
        logits = logits + model.eta * _tree_values(tree, X)
        losses.append(float(np.mean(np.logaddexp(0.0, logits) - y * logits)))
    return losses
