"""Participant-level stratified 10-fold CV with cross-fold test voting.

Protocol: folds partition the training subjects (sizes differ by at most
one, per-fold class counts differ by at most one).  For every fold the
scaler and all ensemble classifiers are fit strictly on the out-of-fold
subjects; held-out predictions are pooled over folds into one CV accuracy.
On the test set each fold's ensemble first resolves its own vote, then the
k fold verdicts vote (the flattened k x atoms joint pool sits behind
``fold_vote=False``).

Everything here is a pure function of (data, config, seed): per-model seeds
are derived by hashing (seed, system, fold, unit), and every trained model
records a fingerprint of the subject ids it saw, so leakage is assertable
after the fact.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import classifiers
from .errors import AdscreenError, SubjectMismatchError
from .feature_store import apply_scaler, fit_scaler
from .fusion import EnsembleSpec, concat_features, fuse_decisions

# ---------------------------------------------------------------------------
# fold assignment


@dataclass
class FoldAssignment:
    k: int
    seed: int
    assignment: dict  # subject_id -> fold index

    def fold_subjects(self, f: int) -> list:
        return [s for s, g in self.assignment.items() if g == f]

    def train_subjects(self, f: int) -> list:
        return [s for s, g in self.assignment.items() if g != f]

    def sizes(self) -> list:
        counts = [0] * self.k
        for g in self.assignment.values():
            counts[g] += 1
        return counts


def make_folds(subjects, labels, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Seed-deterministic stratified partition.

    Subjects are shuffled within each class and dealt round-robin through a
    single position counter that runs across classes, so overall fold sizes
    and per-class fold counts both differ by at most one.
    """
    subjects = [str(s) for s in subjects]
    if isinstance(labels, dict):
        y = np.array([labels[s] for s in subjects], dtype=int)
    else:
        y = np.asarray(labels, dtype=int).ravel()
    if len(subjects) != len(y):
        raise AdscreenError("subjects and labels disagree in length")
    if len(set(subjects)) != len(subjects):
        raise AdscreenError("duplicate subject ids in fold assignment")
    if k < 2:
        raise AdscreenError("need at least 2 folds")
    if len(subjects) < k:
        raise AdscreenError(f"cannot make {k} folds from {len(subjects)} subjects")
    if len(np.unique(y)) < 2:
        raise AdscreenError("both classes must be present to stratify")

    rng = np.random.default_rng(seed)
    assignment = {}
    position = 0
    for cls in sorted(np.unique(y)):
        members = sorted(s for s, lab in zip(subjects, y) if lab == cls)
        order = rng.permutation(len(members))
        for i in order:
            assignment[members[i]] = position % k
            position += 1
    return FoldAssignment(k=k, seed=seed, assignment=assignment)


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class Metrics:
    """Binary confusion counts with AD (label 1) as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n if self.n else 0.0

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


def compute_metrics(pred: dict, truth: dict) -> Metrics:
    if set(pred) != set(truth):
        raise SubjectMismatchError("prediction and truth cover different subjects")
    tp = fp = fn = tn = 0
    for sid, p in pred.items():
        t = truth[sid]
        if p == 1 and t == 1:
            tp += 1
        elif p == 1 and t == 0:
            fp += 1
        elif p == 0 and t == 1:
            fn += 1
        else:
            tn += 1
    return Metrics(tp=tp, fp=fp, fn=fn, tn=tn)


def mean_accuracy(accs) -> float:
    accs = list(accs)
    if not accs:
        raise AdscreenError("mean_accuracy of an empty list")
    return float(np.mean(accs))


# ---------------------------------------------------------------------------
# cross-validation


@dataclass
class FoldFit:
    """Everything fitted on one fold's training portion."""

    fold: int
    train_ids: list
    fingerprint: str  # sha256 over the sorted training subject ids
    scalers: dict  # feature_set_id -> Scaler
    models: list  # one TrainedModel per ensemble unit
    degenerate: bool = False


@dataclass
class CVResult:
    cv_accuracy: float  # pooled held-out correctness (primary)
    cv_accuracy_mean: float  # per-fold average (secondary)
    fold_accuracies: list
    fold_models: list  # list of FoldFit
    heldout: dict  # subject_id -> voted held-out prediction
    tie_subjects: list = field(default_factory=list)
    degenerate_folds: list = field(default_factory=list)


def ensemble_units(spec: EnsembleSpec) -> list:
    """Trainable units: one per atom, or a single concatenated-feature unit."""
    if spec.fusion_mode == "concat_features":
        return [(tuple(a.feature_set_id for a in spec.atoms), spec.atoms[0].classifier)]
    return [((a.feature_set_id,), a.classifier) for a in spec.atoms]


def _unit_groups(spec: EnsembleSpec, families) -> list | None:
    """Family keys per unit for two-stage voting, or None for a flat pool."""
    if spec.fusion_mode != "decision_vote" or spec.flatten or families is None:
        return None
    return [families[a.feature_set_id] for a in spec.atoms]


def derive_seed(base_seed: int, system_id: str, fold: int, unit: int) -> int:
    tag = f"{base_seed}|{system_id}|{fold}|{unit}".encode()
    return int.from_bytes(hashlib.sha256(tag).digest()[:4], "big")


def train_fingerprint(train_ids) -> str:
    return hashlib.sha256("\n".join(sorted(train_ids)).encode()).hexdigest()


def _fit_fold(spec, units, train_data, fold_idx, train_ids, base_seed, trainer) -> FoldFit:
    fingerprint = train_fingerprint(train_ids)
    scalers = {}
    models = []
    for u_idx, (fs_ids, clf) in enumerate(units):
        blocks = []
        for fs in fs_ids:
            sub = train_data[fs].restrict(train_ids)
            if fs not in scalers:
                scalers[fs] = fit_scaler(sub)
            blocks.append(apply_scaler(scalers[fs], sub))
        unit_matrix = concat_features(blocks)
        if unit_matrix.labels is None:
            raise AdscreenError(f"feature set(s) {fs_ids} carry no training labels")
        seed = derive_seed(base_seed, spec.system_id, fold_idx, u_idx)
        model = trainer(unit_matrix.rows, unit_matrix.labels, clf, seed=seed)
        model.fit_fingerprint = fingerprint
        models.append(model)
    return FoldFit(
        fold=fold_idx, train_ids=list(train_ids), fingerprint=fingerprint,
        scalers=scalers, models=models,
        degenerate=any(m.degenerate for m in models),
    )


def _unit_vectors(fit: FoldFit, units, data, subject_ids) -> list:
    """Per-unit decision vectors over the given subjects (scaled prediction)."""
    vectors = []
    for (fs_ids, _), model in zip(units, fit.models):
        blocks = [apply_scaler(fit.scalers[fs], data[fs].restrict(subject_ids)) for fs in fs_ids]
        X = concat_features(blocks).rows
        preds = classifiers.predict(model, X)
        vectors.append({sid: int(p) for sid, p in zip(subject_ids, preds)})
    return vectors


def cross_validate(
    spec: EnsembleSpec,
    train_data: dict,
    folds: FoldAssignment,
    families: dict | None = None,
    base_seed: int = 0,
    trainer=classifiers.train,
) -> CVResult:
    """Fit per fold, vote per fold, pool the held-out decisions.

    ``train_data`` maps feature_set_id -> labeled FeatureMatrix covering all
    fold subjects.  ``trainer`` is injectable for harness tests and must
    accept (X, y, spec, seed=...).
    """
    units = ensemble_units(spec)
    groups = _unit_groups(spec, families)
    truth = {}
    for fs_ids, _ in units:
        for fs in fs_ids:
            m = train_data[fs]
            for sid, lab in zip(m.subject_ids, m.labels):
                truth[sid] = int(lab)

    heldout = {}
    tie_subjects = []
    fold_fits = []
    fold_accs = []
    degenerate_folds = []
    for f in range(folds.k):
        held_ids = folds.fold_subjects(f)
        train_ids = folds.train_subjects(f)
        fit = _fit_fold(spec, units, train_data, f, train_ids, base_seed, trainer)
        if fit.degenerate:
            degenerate_folds.append(f)
        vectors = _unit_vectors(fit, units, train_data, held_ids)
        voted = fuse_decisions(vectors, groups, spec.tie_break, tie_subjects)
        overlap = set(voted) & set(heldout)
        if overlap:
            raise AdscreenError(f"subjects held out twice: {sorted(overlap)[:3]}")
        heldout.update(voted)
        fold_accs.append(float(np.mean([voted[s] == truth[s] for s in held_ids])))
        fold_fits.append(fit)

    cv_acc = float(np.mean([heldout[s] == truth[s] for s in heldout]))
    return CVResult(
        cv_accuracy=cv_acc,
        cv_accuracy_mean=mean_accuracy(fold_accs),
        fold_accuracies=fold_accs,
        fold_models=fold_fits,
        heldout=heldout,
        tie_subjects=tie_subjects,
        degenerate_folds=degenerate_folds,
    )


def vote_over_folds(
    spec: EnsembleSpec,
    fold_fits: list,
    test_data: dict,
    families: dict | None = None,
    tie_log=None,
) -> dict:
    """Test-set decision: fold ensembles vote, then folds vote.

    With ``spec.fold_vote`` False the nested vote collapses into one flat
    pool of every (fold, unit) decision vector.
    """
    units = ensemble_units(spec)
    groups = _unit_groups(spec, families)
    first_fs = units[0][0][0]
    subject_ids = list(test_data[first_fs].subject_ids)
    for fs_ids, _ in units:
        for fs in fs_ids:
            if set(test_data[fs].subject_ids) != set(subject_ids):
                raise SubjectMismatchError(
                    f"test subjects of {fs!r} differ from {first_fs!r}"
                )

    if spec.fold_vote:
        per_fold = [
            fuse_decisions(_unit_vectors(fit, units, test_data, subject_ids),
                           groups, spec.tie_break, tie_log)
            for fit in fold_fits
        ]
        return fuse_decisions(per_fold, None, spec.tie_break, tie_log)
    pool = []
    for fit in fold_fits:
        pool.extend(_unit_vectors(fit, units, test_data, subject_ids))
    return fuse_decisions(pool, None, spec.tie_break, tie_log)


# ---------------------------------------------------------------------------
# reports


@dataclass
class SystemResult:
    system_id: str
    cv_accuracy: float | None = None
    cv_accuracy_mean: float | None = None
    test_metrics: Metrics | None = None
    tie_count: int = 0
    degenerate_folds: list = field(default_factory=list)
    error: str | None = None


@dataclass
class ExperimentReport:
    digest: str
    seed: int
    rows: list


def _pct(v: float | None) -> str:
    return "" if v is None else f"{100.0 * v:.2f}"


def report_csv(report: ExperimentReport) -> str:
    lines = [
        "system_id,cv_accuracy,cv_accuracy_mean,test_accuracy,test_precision,"
        "test_recall,test_f1,ties,degenerate_folds,error"
    ]
    for row in report.rows:
        tm = row.test_metrics
        cells = [
            row.system_id,
            _pct(row.cv_accuracy),
            _pct(row.cv_accuracy_mean),
            _pct(tm.accuracy) if tm else "",
            _pct(tm.precision) if tm else "",
            _pct(tm.recall) if tm else "",
            _pct(tm.f1) if tm else "",
            str(row.tie_count),
            ";".join(str(f) for f in row.degenerate_folds),
            (row.error or "").replace(",", ";").replace("\n", " "),
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_report(report: ExperimentReport) -> str:
    """Aligned-text table keyed by system id; percentages to 2 decimals."""
    header = ["system", "cv_acc", "cv_acc_mean", "test_acc", "test_pre", "test_rec",
              "test_f1", "ties", "notes"]
    rows = []
    for row in report.rows:
        tm = row.test_metrics
        notes = []
        if row.degenerate_folds:
            notes.append("degenerate folds " + ",".join(map(str, row.degenerate_folds)))
        if row.error:
            notes.append("ERROR: " + row.error.replace("\n", " "))
        rows.append([
            row.system_id,
            _pct(row.cv_accuracy) or "-",
            _pct(row.cv_accuracy_mean) or "-",
            (_pct(tm.accuracy) if tm else "-"),
            (_pct(tm.precision) if tm else "-"),
            (_pct(tm.recall) if tm else "-"),
            (_pct(tm.f1) if tm else "-"),
            str(row.tie_count),
            "; ".join(notes),
        ])
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
              for i in range(len(header))]
    out = [f"config digest: {report.digest}", f"seed: {report.seed}", ""]
    out.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip())
    out.append("  ".join("-" * w for w in widths))
    for r in rows:
        out.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(r)).rstrip())
    return "\n".join(out) + "\n"
