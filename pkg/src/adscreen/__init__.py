"""Ensemble screening of Alzheimer's disease from speech-transcript embeddings.

Pipeline: transcript cleaning -> per-subject embedding tables (produced
externally, exchanged as CSV + manifest) -> five back-end classifiers ->
majority-vote fusion across snapshots, feature types, classifiers and
transcript sources -> stratified 10-fold CV with cross-fold test voting.
"""

from . import classifiers, evaluation, feature_store, fusion, synthetic, transcripts
from .errors import (
    AdscreenError,
    ConfigError,
    FeatureFileError,
    ManifestError,
    NumericalError,
    SubjectMismatchError,
)

__version__ = "0.1.0"

__all__ = [
    "AdscreenError",
    "ConfigError",
    "FeatureFileError",
    "ManifestError",
    "NumericalError",
    "SubjectMismatchError",
    "classifiers",
    "evaluation",
    "feature_store",
    "fusion",
    "synthetic",
    "transcripts",
]
