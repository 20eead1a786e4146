"""Checkpoint loading helpers shared by fine-tuning and extraction."""

from __future__ import annotations

import os

from .errors import CheckpointError


def quiet_transformers() -> None:
    """Silence load reports and shard progress bars; errors still surface."""
    import transformers

    transformers.logging.set_verbosity_error()
    transformers.utils.logging.disable_progress_bar()


def require_checkpoint(path: str) -> str:
    """Validate that ``path`` looks like a saved checkpoint directory."""
    if not os.path.isfile(os.path.join(path, "config.json")):
        raise CheckpointError(f"checkpoint unavailable: no config.json under {path!r}")
    return path


def load_tokenizer(checkpoint: str):
    from transformers import AutoTokenizer

    quiet_transformers()
    require_checkpoint(checkpoint)
    try:
        return AutoTokenizer.from_pretrained(checkpoint)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot load tokenizer from {checkpoint!r}: {exc}") from exc
