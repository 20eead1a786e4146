"""Majority-vote decision fusion and snapshot-epoch selection.

The voting unit is an *atom*: one feature set paired with one classifier
spec.  Ensembles either vote over per-atom binary decisions
(``decision_vote``) or concatenate the atom feature sets into one wide
matrix for a single classifier (``concat_features``).  Votes are strict
majorities; an even split resolves to a fixed tie-break label, positive
(AD = 1) by default.

Decision voting is flat by default — every atom is one voter.  With
``flatten=False`` atoms are first grouped by feature family (encoder,
source, source tag): each family resolves its own internal vote and the
family verdicts then vote against each other.
"""

from __future__ import annotations

import fnmatch
import re
from dataclasses import dataclass

import numpy as np

from .classifiers import ClassifierSpec, make_spec
from .errors import AdscreenError, ConfigError, ManifestError, SubjectMismatchError
from .feature_store import FeatureMatrix

# ---------------------------------------------------------------------------
# snapshot epoch schemes


@dataclass(frozen=True)
class SnapshotScheme:
    """Which fine-tuning epochs contribute snapshot models."""

    kind: str  # fixed_stride | random | geometric
    total_epochs: int
    stride: int = 1
    seed: int = 0
    count: int = 3


_SCHEME_RE = re.compile(r"^(fixed_stride|random|geometric)(?:\((\d+)\))?$")


def parse_scheme(text: str, total_epochs: int, seed: int = 0) -> SnapshotScheme:
    m = _SCHEME_RE.match(text.strip())
    if m is None:
        raise ConfigError(f"unrecognized snapshot scheme {text!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "fixed_stride":
        return SnapshotScheme(kind, total_epochs, stride=int(arg or 1), seed=seed)
    if arg is not None:
        raise ConfigError(f"scheme {kind!r} takes no argument")
    return SnapshotScheme(kind, total_epochs, seed=seed)


def snapshot_epochs(scheme: SnapshotScheme) -> list:
    """Three distinct epochs in [1, total_epochs] per the scheme kind."""
    E = scheme.total_epochs
    if scheme.kind == "fixed_stride":
        if scheme.count != 3:
            raise ConfigError("fixed_stride selects exactly 3 epochs")
        s = scheme.stride
        if s < 1 or E - 2 * s < 1:
            raise ConfigError(f"stride {s} too large for {E} epochs")
        return [E - 2 * s, E - s, E]
    if scheme.kind == "geometric":
        if scheme.count != 3:
            raise ConfigError("geometric selects exactly 3 epochs")
        # intervals back from the final epoch shrink by 3: E-4d, E-d, E
        d = int(np.floor(E / 10 + 0.5))
        if d < 1 or E - 4 * d < 1:
            raise ConfigError(f"{E} epochs too few for the geometric scheme")
        return [E - 4 * d, E - d, E]
    if scheme.kind == "random":
        if E < scheme.count:
            raise ConfigError(f"cannot draw {scheme.count} distinct epochs from {E}")
        rng = np.random.default_rng(scheme.seed)
        picks = rng.choice(E, size=scheme.count, replace=False) + 1
        return sorted(int(e) for e in picks)
    raise ConfigError(f"unknown scheme kind {scheme.kind!r}")


# ---------------------------------------------------------------------------
# voting


def majority_vote(decisions, tie_break: str = "positive") -> int:
    """Strictly more frequent label; an exact tie returns the tie_break class."""
    votes = list(decisions)
    if not votes:
        raise AdscreenError("majority_vote over an empty pool")
    if any(v not in (0, 1) for v in votes):
        raise AdscreenError("votes must be binary 0/1")
    if tie_break not in ("positive", "negative"):
        raise ConfigError(f"unknown tie_break {tie_break!r}")
    ones = sum(votes)
    zeros = len(votes) - ones
    if ones > zeros:
        return 1
    if zeros > ones:
        return 0
    return 1 if tie_break == "positive" else 0


def run_decision_vote(atom_decisions, tie_break: str = "positive", tie_log=None) -> dict:
    """Per-subject majority over aligned decision vectors.

    Each vector is a dict subject_id -> {0,1}; all must cover the same
    subjects.  Subjects whose pool splits evenly are appended to tie_log
    when one is supplied (diagnostics only).
    """
    vectors = list(atom_decisions)
    if not vectors:
        raise AdscreenError("no decision vectors to fuse")
    universe = set(vectors[0])
    for v in vectors[1:]:
        if set(v) != universe:
            raise SubjectMismatchError("decision vectors cover different subjects")
    fused = {}
    for sid in sorted(universe):
        pool = [v[sid] for v in vectors]
        if tie_log is not None and sum(pool) * 2 == len(pool):
            tie_log.append(sid)
        fused[sid] = majority_vote(pool, tie_break)
    return fused


def fuse_decisions(vectors, groups=None, tie_break: str = "positive", tie_log=None) -> dict:
    """Flat vote, or two-stage family-then-overall vote when groups are given.

    groups is a list parallel to vectors; vectors sharing a group key vote
    among themselves first and each group then casts one vote.  A single
    distinct group degenerates to the flat vote.
    """
    vectors = list(vectors)
    if groups is None:
        return run_decision_vote(vectors, tie_break, tie_log)
    if len(groups) != len(vectors):
        raise AdscreenError("groups must align with decision vectors")
    ordered = []  # first-seen group order, for determinism
    members = {}
    for key, vec in zip(groups, vectors):
        if key not in members:
            members[key] = []
            ordered.append(key)
        members[key].append(vec)
    stage_one = [run_decision_vote(members[key], tie_break, tie_log) for key in ordered]
    return run_decision_vote(stage_one, tie_break, tie_log)


# ---------------------------------------------------------------------------
# ensemble description


@dataclass(frozen=True)
class Atom:
    """One voter: a feature set trained through one classifier."""

    feature_set_id: str
    classifier: ClassifierSpec


@dataclass
class EnsembleSpec:
    atoms: list
    tie_break: str = "positive"
    fusion_mode: str = "decision_vote"  # or concat_features
    flatten: bool = True
    cv_k: int = 10
    cv_seed: int = 0
    fold_vote: bool = True
    system_id: str = ""

    def __post_init__(self):
        if not self.atoms:
            raise ConfigError("ensemble needs at least one atom")
        if self.fusion_mode not in ("decision_vote", "concat_features"):
            raise ConfigError(f"unknown fusion_mode {self.fusion_mode!r}")
        if self.tie_break not in ("positive", "negative"):
            raise ConfigError(f"unknown tie_break {self.tie_break!r}")
        if self.fusion_mode == "concat_features":
            kinds = {a.classifier.kind for a in self.atoms}
            if len(kinds) > 1:
                raise ConfigError(
                    "concat_features requires a single classifier kind, got "
                    + ", ".join(sorted(kinds))
                )


def resolve_selectors(selectors, manifest) -> list:
    """Feature-set ids matched by exact-id or fnmatch-glob selectors.

    Order is stable: selectors in the given order, glob matches in manifest
    order, duplicates collapsed to their first occurrence.
    """
    entries = list(manifest.values()) if isinstance(manifest, dict) else list(manifest)
    ids = [e.id for e in entries]
    resolved = []
    for sel in selectors:
        if any(ch in sel for ch in "*?["):
            hits = [i for i in ids if fnmatch.fnmatchcase(i, sel)]
            if not hits:
                raise ManifestError(f"selector {sel!r} matches no feature set")
        else:
            if sel not in ids:
                raise ManifestError(f"unknown feature set {sel!r}")
            hits = [sel]
        for h in hits:
            if h not in resolved:
                resolved.append(h)
    return resolved


def build_atoms(selectors, classifier_kinds, manifest) -> list:
    """Cartesian expansion of feature-set selectors x classifier kinds."""
    resolved = resolve_selectors(selectors, manifest)
    if isinstance(classifier_kinds, (str, ClassifierSpec)):
        classifier_kinds = [classifier_kinds]
    specs = [k if isinstance(k, ClassifierSpec) else make_spec(k) for k in classifier_kinds]
    atoms = [Atom(fs, spec) for fs in resolved for spec in specs]
    if not atoms:
        raise ManifestError("atom expansion came up empty")
    return atoms


# ---------------------------------------------------------------------------
# feature-level fusion


def concat_features(sets) -> FeatureMatrix:
    """Row-wise horizontal concatenation of feature matrices."""
    sets = list(sets)
    if not sets:
        raise AdscreenError("nothing to concatenate")
    first = sets[0]
    if len(sets) == 1:
        return first
    for other in sets[1:]:
        if list(other.subject_ids) != list(first.subject_ids):
            raise SubjectMismatchError("subject order differs between feature sets")
        if first.labels is not None and other.labels is not None:
            if not np.array_equal(first.labels, other.labels):
                raise SubjectMismatchError("labels disagree between feature sets")
    rows = np.hstack([s.rows for s in sets])
    return FeatureMatrix(subject_ids=list(first.subject_ids), rows=rows, labels=first.labels)


# ---------------------------------------------------------------------------
# decision vector I/O (audit trail)


def save_decisions(decisions: dict, path: str) -> None:
    lines = ["subject_id,decision"]
    for sid in sorted(decisions):
        lines.append(f"{sid},{int(decisions[sid])}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_decisions(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].split(",")[0] != "subject_id":
        raise AdscreenError(f"{path}: expected a subject_id,<label> header")
    out = {}
    for ln in lines[1:]:
        sid, _, val = ln.partition(",")
        if val not in ("0", "1"):
            raise AdscreenError(f"{path}: bad decision {val!r} for {sid}")
        if sid in out:
            raise AdscreenError(f"{path}: duplicate subject {sid}")
        out[sid] = int(val)
    return out
