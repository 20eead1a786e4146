#!/usr/bin/env python3
"""
A complete experiment in one sitting
====================================

Generates a synthetic embedding bundle (two encoders, three epochs each),
then runs one ensemble by hand through the library API: per-fold training,
held-out voting, cross-fold test voting, and the final metric rendering.
The `adscreen run` CLI automates exactly these steps from a YAML config.
"""

import tempfile

from adscreen.classifiers import make_spec
from adscreen.evaluation import (
    ExperimentReport,
    SystemResult,
    compute_metrics,
    cross_validate,
    make_folds,
    render_report,
    vote_over_folds,
)
from adscreen.feature_store import load_feature_set, load_manifest
from adscreen.fusion import EnsembleSpec, build_atoms
from adscreen.synthetic import make_bundle

workdir = tempfile.mkdtemp(prefix="adscreen-demo-")
paths = make_bundle(workdir, seed=7, n_train=60, n_test=20, dim=32)
print("bundle written under", workdir)

manifest = load_manifest(paths["manifest"])
print("feature sets:", ", ".join(manifest))

# one system: every bert snapshot votes through an SVM
atoms = build_atoms(["bert-*"], ["svm"], manifest)
spec = EnsembleSpec(atoms=atoms, system_id="bert-snapshots-svm")
print(f"{len(atoms)} atoms in the ensemble")

base = paths["features"].rsplit("/", 1)[0]
train = {a.feature_set_id: load_feature_set(manifest[a.feature_set_id], base, "train")
         for a in atoms}
test = {a.feature_set_id: load_feature_set(manifest[a.feature_set_id], base, "test")
        for a in atoms}

labels = {s: int(l) for s, l in zip(train[atoms[0].feature_set_id].subject_ids,
                                    train[atoms[0].feature_set_id].labels)}
folds = make_folds(sorted(labels), [labels[s] for s in sorted(labels)], k=10, seed=11)

cv = cross_validate(spec, train, folds, base_seed=11)
print(f"pooled CV accuracy {100 * cv.cv_accuracy:.2f} "
      f"(per-fold mean {100 * cv.cv_accuracy_mean:.2f})")

# the ten fold ensembles each predict the test set, then vote
decisions = vote_over_folds(spec, cv.fold_models, test)
truth = {s: int(l) for s, l in zip(test[atoms[0].feature_set_id].subject_ids,
                                   test[atoms[0].feature_set_id].labels)}
metrics = compute_metrics(decisions, truth)

report = ExperimentReport(digest="demo", seed=11, rows=[SystemResult(
    system_id=spec.system_id,
    cv_accuracy=cv.cv_accuracy,
    cv_accuracy_mean=cv.cv_accuracy_mean,
    test_metrics=metrics,
    tie_count=len(cv.tie_subjects),
)])
print()
print(render_report(report), end="")
