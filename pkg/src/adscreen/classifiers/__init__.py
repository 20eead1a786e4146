"""Back-end classifiers: five trainers behind one train/predict facade."""

from .base import (
    ClassifierSpec,
    ConstantModel,
    GPModel,
    GpSpec,
    LdaSpec,
    LinearModel,
    MLPModel,
    MlpSpec,
    SvmSpec,
    TrainedModel,
    TreeEnsembleModel,
    TreeNode,
    XgbSpec,
    decision_scores,
    load_model,
    make_spec,
    predict,
    save_model,
    train,
)
from .gp import kernel_rbf, predict_gp, train_gp
from .lda import train_lda
from .mlp import train_mlp
from .svm import train_svm
from .xgb import train_xgb

__all__ = [
    "ClassifierSpec",
    "ConstantModel",
    "GPModel",
    "GpSpec",
    "LdaSpec",
    "LinearModel",
    "MLPModel",
    "MlpSpec",
    "SvmSpec",
    "TrainedModel",
    "TreeEnsembleModel",
    "TreeNode",
    "XgbSpec",
    "decision_scores",
    "kernel_rbf",
    "load_model",
    "make_spec",
    "predict",
    "predict_gp",
    "save_model",
    "train",
    "train_gp",
    "train_lda",
    "train_mlp",
    "train_svm",
    "train_xgb",
]
