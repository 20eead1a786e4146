"""Per-subject embeddings from a saved encoder checkpoint.

Each subject's transcript is encoded once and reduced to a single vector:
the final hidden state of the first token by default ([CLS] for BERT,
<s> for RoBERTa), or the mean over all token positions behind a flag.
Inputs longer than the token budget are truncated and reported; empty
transcripts map to a zero vector, emit a warning and are flagged in the
diagnostics rather than aborting a whole extraction run.

Texts are deliberately encoded one at a time.  Padded batches are not
bitwise pad-invariant — the first-token vector of a text changes at the
last float32 bit when the same text is packed next to a longer one — so
batch composition would leak into the artifacts and break byte-identical
reruns.

Output tables use the consumer's CSV grammar (header
``subject_id,label,dim_0..dim_{D-1}``, labels in {0, 1, NA}, shortest
round-trip float repr, LF endings) and are written atomically: staged to
a temp file in the destination directory, then renamed into place.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
import warnings
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigError, EncoderExtractError
from .hf import load_tokenizer, quiet_transformers, require_checkpoint

POOLINGS = ("cls", "mean")


@dataclass
class ExtractionResult:
    """Vectors in sorted-subject order plus per-run diagnostics."""

    subject_ids: list
    matrix: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def extract_embeddings(
    checkpoint: str,
    texts: dict,
    pooling: str = "cls",
    max_tokens: int = 512,
) -> ExtractionResult:
    """Encode every subject text with the checkpoint, one forward pass each.

    ``texts`` maps subject id -> raw transcript text; rows come back in
    sorted subject-id order.  The model runs in eval mode under no_grad,
    so a given (checkpoint, text) pair always yields the same vector.
    """
    import torch
    from transformers import AutoModel

    if pooling not in POOLINGS:
        raise ConfigError(f"unknown pooling {pooling!r}; expected one of {POOLINGS}")
    if not texts:
        raise EncoderExtractError("no texts to extract")
    quiet_transformers()
    tok = load_tokenizer(checkpoint)
    try:
        model = AutoModel.from_pretrained(checkpoint, add_pooling_layer=False)
    except (OSError, ValueError) as exc:
        raise EncoderExtractError(
            f"cannot load encoder from {checkpoint!r}: {exc}"
        ) from exc
    model.eval()
    dim = model.config.hidden_size

    ids = sorted(texts)
    rows = np.zeros((len(ids), dim), dtype=float)
    empty, truncated = [], []
    for i, sid in enumerate(ids):
        text = texts[sid]
        if not text.strip():
            warnings.warn(f"subject {sid!r}: empty transcript, emitting a zero vector")
            empty.append(sid)
            continue
        if len(tok(text, truncation=False, verbose=False)["input_ids"]) > max_tokens:
            truncated.append(sid)
        enc = tok(text, truncation=True, max_length=max_tokens, return_tensors="pt")
        with torch.no_grad():
            hidden = model(**enc).last_hidden_state[0]  # (tokens, dim)
        vec = hidden[0] if pooling == "cls" else hidden.mean(dim=0)
        rows[i] = vec.numpy().astype(float)
    diagnostics = {
        "subjects": len(ids),
        "dim": dim,
        "pooling": pooling,
        "max_tokens": max_tokens,
        "empty_subjects": empty,
        "truncated_subjects": truncated,
    }
    return ExtractionResult(ids, rows, diagnostics)


# ---------------------------------------------------------------------------
# artifact writers (independent of the consumer package; same grammar)


def _write_atomic(path: str, data: str) -> None:
    dest_dir = os.path.dirname(os.path.abspath(path))
    fd, staging = tempfile.mkstemp(dir=dest_dir, prefix=".staging-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(staging, path)
    except BaseException:
        if os.path.exists(staging):
            os.unlink(staging)
        raise


def write_feature_csv(subject_ids, matrix, path: str, labels=None) -> None:
    """Serialize one embedding table; every float survives a round trip."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != len(subject_ids):
        raise EncoderExtractError("matrix shape does not match subject ids")
    if labels is not None and len(labels) != len(subject_ids):
        raise EncoderExtractError("labels do not match subject ids")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["subject_id", "label"] + [f"dim_{j}" for j in range(matrix.shape[1])])
    for i, sid in enumerate(subject_ids):
        label = "NA" if labels is None else str(int(labels[i]))
        writer.writerow([sid, label] + [repr(float(v)) for v in matrix[i]])
    _write_atomic(path, buf.getvalue())


def manifest_entry(
    set_id: str,
    encoder: str,
    source: str,
    dim: int,
    path: str,
    epoch: int | None = None,
    source_tag: str = "",
    test_path: str | None = None,
) -> dict:
    """One ``feature_sets`` list element; optional keys omitted when unset."""
    entry = {"id": set_id, "encoder": encoder, "source": source,
             "dim": int(dim), "path": path}
    if epoch is not None:
        entry["epoch"] = int(epoch)
    if source_tag:
        entry["source_tag"] = source_tag
    if test_path is not None:
        entry["test_path"] = test_path
    return entry


def write_manifest_fragment(path: str, entries: list, provenance: dict | None = None) -> None:
    """A loadable manifest naming freshly written tables.

    ``provenance`` rides along as an extra top-level block (checkpoint,
    pooling, defaults version, diagnostics); consumers ignore unknown
    top-level keys.
    """
    doc = {"feature_sets": list(entries)}
    if provenance:
        doc["provenance"] = provenance
    _write_atomic(path, yaml.safe_dump(doc, sort_keys=False))
