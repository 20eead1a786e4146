"""Exception types raised by the fine-tuning and extraction pipeline."""


class EncoderExtractError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EncoderExtractError):
    """A job or CLI configuration value is out of range or inconsistent."""


class CheckpointError(EncoderExtractError):
    """A model checkpoint directory is missing or unloadable."""


class CorpusError(EncoderExtractError):
    """The transcript corpus is empty, missing, or malformed."""


class ScheduleError(EncoderExtractError):
    """A snapshot schedule is malformed or incompatible with the epoch budget."""


class ResourceError(EncoderExtractError):
    """Training ran out of memory or another hard resource limit."""
