"""Classifier specs, fitted-model containers, and the uniform predict facade.

All five back-end classifiers share the same calling convention: a trainer
``train(X, y, spec, seed)`` returning a :class:`TrainedModel`, and a facade
``predict(trained, X)`` returning 0/1 labels.  Hyperparameter defaults are
the fixed experiment values and live on the spec dataclasses.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np

from ..errors import AdscreenError

CLASSIFIER_KINDS = ("svm", "lda", "gp", "mlp", "xgb")


@dataclass(frozen=True)
class SvmSpec:
    kind: str = "svm"
    C: float = 1.0
    kernel: str = "linear"
    dual_tol: float = 1e-8  # stop when max KKT violation falls below this
    max_iter: int = 2_000_000


@dataclass(frozen=True)
class LdaSpec:
    kind: str = "lda"
    solver: str = "svd"
    sv_cutoff: float = 1e-12  # relative singular-value cutoff for the pseudo-inverse


@dataclass(frozen=True)
class GpSpec:
    kind: str = "gp"
    signal_variance: float = 4.0
    length_scale: float = 5.0
    max_newton_iters: int = 100
    newton_tol: float = 1e-6


@dataclass(frozen=True)
class MlpSpec:
    kind: str = "mlp"
    hidden: int = 256
    l2_alpha: float = 1e-5
    max_iters: int = 200
    grad_tol: float = 1e-5


@dataclass(frozen=True)
class XgbSpec:
    kind: str = "xgb"
    rounds: int = 16
    max_depth: int = 2
    eta: float = 0.4
    gamma: float = 0.1
    lam: float = 1.0


ClassifierSpec = Union[SvmSpec, LdaSpec, GpSpec, MlpSpec, XgbSpec]

_SPEC_TYPES = {"svm": SvmSpec, "lda": LdaSpec, "gp": GpSpec, "mlp": MlpSpec, "xgb": XgbSpec}


def make_spec(kind: str, **overrides) -> ClassifierSpec:
    if kind not in _SPEC_TYPES:
        raise AdscreenError(f"unknown classifier kind {kind!r}")
    return _SPEC_TYPES[kind](**overrides)


@dataclass
class LinearModel:
    """Hyperplane decision rule; houses both SVM and LDA solutions."""

    w: np.ndarray
    b: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.w + self.b


@dataclass
class ConstantModel:
    """Degenerate single-class fallback so pathological folds never crash."""

    label: int


@dataclass
class GPModel:
    """Laplace-approximated GP classifier state, ready for prediction."""

    X_train: np.ndarray
    y_pm: np.ndarray  # labels recoded to -1/+1
    f_hat: np.ndarray  # posterior mode of the latent function
    grad_at_mode: np.ndarray  # t - sigmoid(f_hat), the predictive-mean weights
    W_sqrt: np.ndarray
    chol_B: np.ndarray  # lower Cholesky factor of I + W^1/2 K W^1/2
    objective_trace: list = field(default_factory=list)
    newton_iters: int = 0


@dataclass
class MLPModel:
    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    seed: int
    final_loss: float = float("nan")
    init_loss: float = float("nan")


@dataclass
class TreeNode:
    """Internal node (feature, threshold, children) or leaf (weight)."""

    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    weight: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass
class TreeEnsembleModel:
    trees: list
    eta: float
    base_score_logit: float = 0.0


@dataclass
class TrainedModel:
    """A fitted classifier plus the provenance the harness needs."""

    kind: str
    spec: ClassifierSpec
    model: object
    seed: int | None = None
    dim: int | None = None
    fit_fingerprint: str | None = None
    degenerate: bool = False

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict(self, X)


def _check_dim(trained: TrainedModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if trained.dim is not None and X.shape[1] != trained.dim:
        raise AdscreenError(
            f"model expects dim {trained.dim}, got {X.shape[1]}"
        )
    return X


def decision_scores(trained: TrainedModel, X: np.ndarray) -> np.ndarray:
    """Real-valued scores: signed distance for linear/tree kinds, probability
    for GP/MLP.  Labels are 1 wherever the score reaches the kind's threshold
    (0 for signed scores, 0.5 for probabilities); exact ties go to class 1.
    """
    from . import gp, mlp, xgb  # local to avoid import cycles

    X = _check_dim(trained, X)
    m = trained.model
    if isinstance(m, ConstantModel):
        return np.full(X.shape[0], 1.0 if m.label == 1 else -1.0)
    if isinstance(m, LinearModel):
        return m.decision(X)
    if isinstance(m, GPModel):
        return gp.predict_proba(m, X, trained.spec)
    if isinstance(m, MLPModel):
        return mlp.predict_proba(m, X)
    if isinstance(m, TreeEnsembleModel):
        return xgb.predict_logits(m, X)
    raise AdscreenError(f"cannot score model of type {type(m).__name__}")


def predict(trained: TrainedModel, X: np.ndarray) -> np.ndarray:
    scores = decision_scores(trained, X)
    threshold = 0.5 if isinstance(trained.model, (GPModel, MLPModel)) else 0.0
    return (scores >= threshold).astype(int)


def train(X: np.ndarray, y: np.ndarray, spec: ClassifierSpec, seed: int = 0) -> TrainedModel:
    """Dispatch to the kind-specific trainer."""
    from . import gp, lda, mlp, svm, xgb

    trainers = {
        "svm": lambda: svm.train_svm(X, y, spec),
        "lda": lambda: lda.train_lda(X, y, spec),
        "gp": lambda: gp.train_gp(X, y, spec),
        "mlp": lambda: mlp.train_mlp(X, y, spec, seed=seed),
        "xgb": lambda: xgb.train_xgb(X, y, spec),
    }
    if spec.kind not in trainers:
        raise AdscreenError(f"unknown classifier kind {spec.kind!r}")
    return trainers[spec.kind]()


def constant_fallback(y: np.ndarray, spec: ClassifierSpec, seed: int | None, dim: int) -> TrainedModel:
    """Single-class training data yields a flagged constant classifier."""
    label = int(np.asarray(y).ravel()[0])
    return TrainedModel(
        kind=spec.kind, spec=spec, model=ConstantModel(label),
        seed=seed, dim=dim, degenerate=True,
    )


def _tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"weight": node.weight}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _tree_to_dict(node.left),
        "right": _tree_to_dict(node.right),
    }


def _tree_from_dict(d: dict) -> TreeNode:
    if "weight" in d:
        return TreeNode(weight=d["weight"])
    return TreeNode(
        feature=d["feature"], threshold=d["threshold"],
        left=_tree_from_dict(d["left"]), right=_tree_from_dict(d["right"]),
    )


def _params_to_jsonable(model: object) -> dict:
    if isinstance(model, ConstantModel):
        return {"type": "constant", "label": model.label}
    if isinstance(model, LinearModel):
        return {"type": "linear", "w": model.w.tolist(), "b": float(model.b)}
    if isinstance(model, GPModel):
        return {
            "type": "gp",
            "X_train": model.X_train.tolist(),
            "y_pm": model.y_pm.tolist(),
            "f_hat": model.f_hat.tolist(),
            "grad_at_mode": model.grad_at_mode.tolist(),
            "W_sqrt": model.W_sqrt.tolist(),
            "chol_B": model.chol_B.tolist(),
        }
    if isinstance(model, MLPModel):
        return {
            "type": "mlp",
            "W1": model.W1.tolist(), "b1": model.b1.tolist(),
            "w2": model.w2.tolist(), "b2": float(model.b2),
            "seed": model.seed,
        }
    if isinstance(model, TreeEnsembleModel):
        return {
            "type": "trees",
            "eta": model.eta,
            "base_score_logit": model.base_score_logit,
            "trees": [_tree_to_dict(t) for t in model.trees],
        }
    raise AdscreenError(f"cannot serialize model of type {type(model).__name__}")


def _params_from_jsonable(d: dict) -> object:
    t = d["type"]
    if t == "constant":
        return ConstantModel(int(d["label"]))
    if t == "linear":
        return LinearModel(np.array(d["w"], dtype=float), float(d["b"]))
    if t == "gp":
        return GPModel(
            X_train=np.array(d["X_train"], dtype=float),
            y_pm=np.array(d["y_pm"], dtype=float),
            f_hat=np.array(d["f_hat"], dtype=float),
            grad_at_mode=np.array(d["grad_at_mode"], dtype=float),
            W_sqrt=np.array(d["W_sqrt"], dtype=float),
            chol_B=np.array(d["chol_B"], dtype=float),
        )
    if t == "mlp":
        return MLPModel(
            W1=np.array(d["W1"], dtype=float), b1=np.array(d["b1"], dtype=float),
            w2=np.array(d["w2"], dtype=float), b2=float(d["b2"]), seed=int(d["seed"]),
        )
    if t == "trees":
        return TreeEnsembleModel(
            trees=[_tree_from_dict(x) for x in d["trees"]],
            eta=float(d["eta"]),
            base_score_logit=float(d["base_score_logit"]),
        )
    raise AdscreenError(f"unknown serialized model type {t!r}")


def save_model(trained: TrainedModel, path: str) -> None:
    """One self-describing JSON file per model; floats keep repr precision."""
    doc = {
        "kind": trained.kind,
        "spec": asdict(trained.spec),
        "seed": trained.seed,
        "dim": trained.dim,
        "fit_fingerprint": trained.fit_fingerprint,
        "degenerate": trained.degenerate,
        "params": _params_to_jsonable(trained.model),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path: str) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    spec_cls = _SPEC_TYPES[doc["kind"]]
    spec = spec_cls(**doc["spec"])
    return TrainedModel(
        kind=doc["kind"], spec=spec,
        model=_params_from_jsonable(doc["params"]),
        seed=doc["seed"], dim=doc["dim"],
        fit_fingerprint=doc["fit_fingerprint"],
        degenerate=doc["degenerate"],
    )
