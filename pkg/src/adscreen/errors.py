"""Exception types shared across the toolkit."""


class AdscreenError(Exception):
    """Base class for all toolkit errors."""


class FeatureFileError(AdscreenError):
    """A feature CSV violates the file grammar or its manifest contract."""


class ManifestError(AdscreenError):
    """A manifest file is malformed or references unknown entries."""


class SubjectMismatchError(AdscreenError):
    """Two per-subject structures do not cover the same subject universe."""


class NumericalError(AdscreenError):
    """A trainer hit a non-recoverable numerical failure."""


class ConfigError(AdscreenError):
    """An experiment config violates its schema."""
