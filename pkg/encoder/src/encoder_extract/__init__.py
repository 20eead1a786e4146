"""Fine-tune transformer encoders on transcript corpora and export
per-subject embedding tables consumable by the screening experiments.

The two halves are independent: ``fine_tune`` produces snapshot
checkpoints from a seed-pinned job description, and ``extract_embeddings``
turns any saved checkpoint plus a corpus into one vector per subject.
All artifacts are plain files (checkpoint dirs, feature CSVs, YAML
manifest fragments); nothing here imports the consumer package.
"""

from .corpus import load_documents, nsp_pairs, utterances
from .defaults import DEFAULTS_VERSION, FINETUNE_DEFAULTS
from .errors import (
    CheckpointError,
    ConfigError,
    CorpusError,
    EncoderExtractError,
    ResourceError,
    ScheduleError,
)
from .extract import (
    ExtractionResult,
    extract_embeddings,
    manifest_entry,
    write_feature_csv,
    write_manifest_fragment,
)
from .finetune import FineTuneJob, fine_tune
from .schedule import parse_schedule, schedule_epochs

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ConfigError",
    "CorpusError",
    "DEFAULTS_VERSION",
    "EncoderExtractError",
    "ExtractionResult",
    "FINETUNE_DEFAULTS",
    "FineTuneJob",
    "ResourceError",
    "ScheduleError",
    "extract_embeddings",
    "fine_tune",
    "load_documents",
    "manifest_entry",
    "nsp_pairs",
    "parse_schedule",
    "schedule_epochs",
    "utterances",
    "write_feature_csv",
    "write_manifest_fragment",
]
