"""Per-subject embedding tables: CSV load/save, manifests, and normalization.

A feature set is one table of n subjects by dim real-valued columns with an
optional binary label per subject.  The on-disk grammar is UTF-8 CSV with LF
line endings, header ``subject_id,label,dim_0,...,dim_{D-1}``, label in
{0, 1, NA}, and floats serialized with Python's shortest round-trip repr so
that save -> load reproduces every value exactly.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np
import yaml

from .errors import FeatureFileError, ManifestError

ENCODERS = ("bert", "roberta")
SOURCES = ("manual", "asr")


@dataclass
class FeatureSetManifest:
    """Provenance of one embedding table.

    ``epoch`` is the fine-tuning snapshot epoch (None = not fine-tuned).
    ``source_tag`` refines ``source`` for ASR provenance, e.g. "cnn-tdnn".
    ``test_path`` optionally points at the held-out table with the same
    provenance; evaluation needs matched train/test tables per feature set.
    """

    id: str
    encoder: str
    epoch: int | None
    source: str
    dim: int
    path: str
    source_tag: str = ""
    test_path: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ManifestError("feature set id must be nonempty")
        if self.encoder not in ENCODERS:
            raise ManifestError(f"unknown encoder {self.encoder!r} for {self.id!r}")
        if self.source not in SOURCES:
            raise ManifestError(f"unknown source {self.source!r} for {self.id!r}")
        if self.epoch is not None and self.epoch < 1:
            raise ManifestError(f"epoch must be positive for {self.id!r}")
        if self.dim < 1:
            raise ManifestError(f"dim must be positive for {self.id!r}")

    @property
    def family(self) -> tuple:
        """Feature-family key used for two-stage (non-flattened) voting."""
        return (self.encoder, self.source, self.source_tag)


@dataclass
class FeatureMatrix:
    """Ordered per-subject feature rows with optional binary labels."""

    subject_ids: list[str]
    rows: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2:
            raise FeatureFileError("rows must be a 2-D matrix")
        if len(self.subject_ids) != self.rows.shape[0]:
            raise FeatureFileError("subject_ids and rows disagree in length")
        if len(set(self.subject_ids)) != len(self.subject_ids):
            dupes = sorted({s for s in self.subject_ids if self.subject_ids.count(s) > 1})
            raise FeatureFileError(f"duplicate subject ids: {dupes}")
        if not np.all(np.isfinite(self.rows)):
            raise FeatureFileError("feature rows contain non-finite values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape != (self.rows.shape[0],):
                raise FeatureFileError("labels and rows disagree in length")
            if not np.isin(self.labels, (0, 1)).all():
                raise FeatureFileError("labels must be 0 or 1")

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def index_of(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.subject_ids)}

    def restrict(self, subject_ids: list[str]) -> "FeatureMatrix":
        """Submatrix for the given subjects, in the given order."""
        idx = self.index_of()
        try:
            take = [idx[s] for s in subject_ids]
        except KeyError as exc:
            raise FeatureFileError(f"unknown subject id {exc.args[0]!r}") from exc
        labels = self.labels[take] if self.labels is not None else None
        return FeatureMatrix(list(subject_ids), self.rows[take], labels)


@dataclass
class Scaler:
    """Per-column mean/std normalizer (population std, divisor n)."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        self.stds = np.asarray(self.stds, dtype=float)
        if self.means.shape != self.stds.shape or self.means.ndim != 1:
            raise ValueError("means and stds must be 1-D vectors of equal length")
        if (self.stds < 0).any():
            raise ValueError("stds must be nonnegative")

    @property
    def dim(self) -> int:
        return self.means.shape[0]


def fit_scaler(train: FeatureMatrix) -> Scaler:
    """Column means and population standard deviations of the training rows."""
    if train.n < 1:
        raise FeatureFileError("cannot fit a scaler on an empty matrix")
    means = train.rows.mean(axis=0)
    stds = train.rows.std(axis=0)  # numpy default ddof=0, divisor n
    return Scaler(means, stds)


def apply_scaler(scaler: Scaler, m: FeatureMatrix) -> FeatureMatrix:
    """Center and scale to unit variance; constant columns (std 0) map to 0."""
    if m.dim != scaler.dim:
        raise FeatureFileError(
            f"scaler dim {scaler.dim} does not match matrix dim {m.dim}"
        )
    safe = np.where(scaler.stds > 0, scaler.stds, 1.0)
    out = (m.rows - scaler.means) / safe
    out[:, scaler.stds == 0] = 0.0
    return FeatureMatrix(list(m.subject_ids), out, m.labels)


def _format_float(v: float) -> str:
    return repr(float(v))


def _parse_label(text: str, where: str) -> int | None:
    if text == "NA":
        return None
    if text in ("0", "1"):
        return int(text)
    raise FeatureFileError(f"{where}: label must be 0, 1 or NA, got {text!r}")


def save_feature_set(m: FeatureMatrix, path: str) -> None:
    """Write the CSV grammar with full round-trip float precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["subject_id", "label"] + [f"dim_{j}" for j in range(m.dim)])
    for i, sid in enumerate(m.subject_ids):
        label = "NA" if m.labels is None else str(int(m.labels[i]))
        writer.writerow([sid, label] + [_format_float(v) for v in m.rows[i]])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def load_feature_file(path: str, expected_dim: int | None = None) -> FeatureMatrix:
    """Parse one feature CSV; label column may be all-NA (unlabeled export)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FeatureFileError(f"{path}: empty file") from None
        if len(header) < 3 or header[:2] != ["subject_id", "label"]:
            raise FeatureFileError(f"{path}: bad header {header[:3]}...")
        dim = len(header) - 2
        if header[2:] != [f"dim_{j}" for j in range(dim)]:
            raise FeatureFileError(f"{path}: dim columns must be dim_0..dim_{dim - 1}")
        if expected_dim is not None and dim != expected_dim:
            raise FeatureFileError(
                f"{path}: file has {dim} feature columns, manifest says {expected_dim}"
            )
        ids: list[str] = []
        labels: list[int | None] = []
        values: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 2:
                raise FeatureFileError(
                    f"{path}:{lineno}: expected {dim + 2} fields, got {len(row)}"
                )
            sid = row[0]
            labels.append(_parse_label(row[1], f"{path}:{lineno}"))
            vals = [float(v) for v in row[2:]]
            if not all(math.isfinite(v) for v in vals):
                raise FeatureFileError(f"{path}:{lineno}: non-finite feature value")
            ids.append(sid)
            values.append(vals)
    if len(set(ids)) != len(ids):
        dupes = sorted({s for s in ids if ids.count(s) > 1})
        raise FeatureFileError(f"{path}: duplicate subject ids {dupes}")
    have_labels = [l for l in labels if l is not None]
    if have_labels and len(have_labels) != len(labels):
        raise FeatureFileError(f"{path}: labels must be all present or all NA")
    rows = np.array(values, dtype=float).reshape(len(ids), dim)
    return FeatureMatrix(ids, rows, np.array(have_labels) if have_labels else None)


def load_feature_set(
    entry: FeatureSetManifest, base_dir: str = ".", split: str = "train"
) -> FeatureMatrix:
    """Load the table referenced by a manifest entry (row order preserved)."""
    if split == "train":
        rel = entry.path
    elif split == "test":
        if entry.test_path is None:
            raise ManifestError(f"feature set {entry.id!r} has no test_path")
        rel = entry.test_path
    else:
        raise ValueError(f"unknown split {split!r}")
    path = rel if os.path.isabs(rel) else os.path.join(base_dir, rel)
    return load_feature_file(path, expected_dim=entry.dim)


def load_manifest(path: str) -> dict[str, FeatureSetManifest]:
    """Parse the YAML manifest into an ordered id -> entry mapping.

    Schema (see README): top-level key ``feature_sets`` holding a list of
    mappings with keys id, encoder, epoch (optional), source, source_tag
    (optional), dim, path, test_path (optional).
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict) or "feature_sets" not in doc:
        raise ManifestError(f"{path}: manifest must have a 'feature_sets' list")
    entries: dict[str, FeatureSetManifest] = {}
    for raw in doc["feature_sets"]:
        if not isinstance(raw, dict):
            raise ManifestError(f"{path}: feature_sets entries must be mappings")
        known = {"id", "encoder", "epoch", "source", "source_tag", "dim", "path", "test_path"}
        unknown = set(raw) - known
        if unknown:
            raise ManifestError(f"{path}: unknown manifest keys {sorted(unknown)}")
        try:
            entry = FeatureSetManifest(
                id=str(raw["id"]),
                encoder=raw["encoder"],
                epoch=raw.get("epoch"),
                source=raw["source"],
                source_tag=raw.get("source_tag", ""),
                dim=int(raw["dim"]),
                path=raw["path"],
                test_path=raw.get("test_path"),
            )
        except KeyError as exc:
            raise ManifestError(f"{path}: entry missing key {exc.args[0]!r}") from None
        if entry.id in entries:
            raise ManifestError(f"{path}: duplicate feature set id {entry.id!r}")
        entries[entry.id] = entry
    return entries


def save_manifest(entries: dict[str, FeatureSetManifest], path: str) -> None:
    doc = {"feature_sets": []}
    for e in entries.values():
        raw = {
            "id": e.id,
            "encoder": e.encoder,
            "source": e.source,
            "dim": e.dim,
            "path": e.path,
        }
        if e.epoch is not None:
            raw["epoch"] = e.epoch
        if e.source_tag:
            raw["source_tag"] = e.source_tag
        if e.test_path is not None:
            raw["test_path"] = e.test_path
        doc["feature_sets"].append(raw)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
