"""Stratified fold construction, CV protocol, fold voting, and reports."""

import hashlib

import numpy as np
import pytest

from adscreen.classifiers import make_spec
from adscreen.classifiers.base import ConstantModel, TrainedModel
from adscreen.errors import AdscreenError, SubjectMismatchError
from adscreen.evaluation import (
    CVResult,
    ExperimentReport,
    FoldFit,
    Metrics,
    SystemResult,
    _unit_groups,
    compute_metrics,
    cross_validate,
    derive_seed,
    ensemble_units,
    make_folds,
    mean_accuracy,
    render_report,
    report_csv,
    train_fingerprint,
    vote_over_folds,
)
from adscreen.feature_store import FeatureMatrix, fit_scaler
from adscreen.fusion import Atom, EnsembleSpec


def _subjects(n):
    return [f"s{i:03d}" for i in range(n)]


def _balanced_labels(n):
    return {s: i % 2 for i, s in enumerate(_subjects(n))}


# -- fold assignment ---------------------------------------------------------


def test_fold_sizes_108_subjects():
    labels = _balanced_labels(108)
    folds = make_folds(list(labels), labels, k=10, seed=0)
    assert sorted(folds.sizes()) == [10, 10] + [11] * 8
    for f in range(10):
        held = folds.fold_subjects(f)
        pos = sum(labels[s] for s in held)
        assert pos in (5, 6)
        assert len(held) - pos in (5, 6)


def test_folds_partition_without_overlap():
    labels = _balanced_labels(47)
    folds = make_folds(list(labels), labels, k=10, seed=3)
    seen = []
    for f in range(10):
        seen.extend(folds.fold_subjects(f))
    assert sorted(seen) == sorted(labels)
    for f in range(10):
        assert set(folds.fold_subjects(f)).isdisjoint(folds.train_subjects(f))
        assert sorted(folds.fold_subjects(f) + folds.train_subjects(f)) == sorted(labels)


def test_folds_deterministic_per_seed():
    labels = _balanced_labels(30)
    a = make_folds(list(labels), labels, k=5, seed=7)
    b = make_folds(list(labels), labels, k=5, seed=7)
    c = make_folds(list(labels), labels, k=5, seed=8)
    assert a.assignment == b.assignment
    assert a.assignment != c.assignment


def test_make_folds_input_validation():
    labels = _balanced_labels(12)
    with pytest.raises(AdscreenError):
        make_folds(list(labels), labels, k=1)
    with pytest.raises(AdscreenError):
        make_folds(list(labels), labels, k=13)
    with pytest.raises(AdscreenError):
        make_folds(["a", "a", "b"], [0, 1, 0], k=2)
    with pytest.raises(AdscreenError):
        make_folds(["a", "b"], [1, 1], k=2)
    with pytest.raises(AdscreenError):
        make_folds(["a", "b", "c"], [0, 1], k=2)


# -- metrics -----------------------------------------------------------------


def test_metrics_rendering_examples():
    m = Metrics(tp=23, fp=2, fn=1, tn=22)
    assert f"{100 * m.accuracy:.2f}" == "93.75"
    assert f"{100 * m.precision:.2f}" == "92.00"
    assert f"{100 * m.recall:.2f}" == "95.83"
    assert f"{100 * m.f1:.2f}" == "93.88"
    m = Metrics(tp=22, fp=2, fn=2, tn=22)
    for v in (m.accuracy, m.precision, m.recall, m.f1):
        assert f"{100 * v:.2f}" == "91.67"


def test_compute_metrics_counts_and_alignment():
    pred = {"a": 1, "b": 0, "c": 1, "d": 0}
    truth = {"a": 1, "b": 1, "c": 0, "d": 0}
    m = compute_metrics(pred, truth)
    assert (m.tp, m.fp, m.fn, m.tn) == (1, 1, 1, 1)
    assert m.n == 4 and m.accuracy == 0.5
    with pytest.raises(SubjectMismatchError):
        compute_metrics({"a": 1}, truth)


def test_degenerate_metric_denominators():
    m = Metrics(tp=0, fp=0, fn=2, tn=2)
    assert m.precision == 0.0 and m.recall == 0.0 and m.f1 == 0.0


def test_mean_accuracy():
    assert mean_accuracy([0.5, 1.0]) == 0.75
    with pytest.raises(AdscreenError):
        mean_accuracy([])


# -- cross-validation protocol -----------------------------------------------


def _train_bundle(n=108, d=4, separable=False, seed=0):
    rng = np.random.default_rng(seed)
    labels = _balanced_labels(n)
    ids = list(labels)
    y = np.array([labels[s] for s in ids])
    rows = rng.standard_normal((n, d))
    if separable:
        rows[:, 0] = rows[:, 0] * 0.1 + (2.0 * y - 1.0) * 3.0
    fm = FeatureMatrix(subject_ids=ids, rows=rows, labels=y)
    return {"f": fm}, labels


def _always_one_trainer(X, y, spec, seed=0):
    return TrainedModel(kind=spec.kind, spec=spec, model=ConstantModel(1), seed=seed, dim=X.shape[1])


def test_constant_predictor_scores_exactly_half_on_balanced_data():
    data, labels = _train_bundle()
    folds = make_folds(list(labels), labels, k=10, seed=0)
    spec = EnsembleSpec(atoms=[Atom("f", make_spec("svm"))])
    res = cross_validate(spec, data, folds, trainer=_always_one_trainer)
    assert res.cv_accuracy == 0.5
    assert set(res.heldout) == set(labels)
    assert len(res.fold_accuracies) == 10
    assert res.cv_accuracy_mean == pytest.approx(np.mean(res.fold_accuracies))


def test_separable_svm_atom_reaches_full_cv_accuracy():
    data, labels = _train_bundle(n=40, separable=True)
    folds = make_folds(list(labels), labels, k=10, seed=1)
    spec = EnsembleSpec(atoms=[Atom("f", make_spec("svm"))])
    res = cross_validate(spec, data, folds)
    assert res.cv_accuracy == 1.0
    assert res.degenerate_folds == []


def test_fold_fits_record_leakage_fingerprints():
    data, labels = _train_bundle(n=30)
    folds = make_folds(list(labels), labels, k=5, seed=2)
    spec = EnsembleSpec(atoms=[Atom("f", make_spec("lda"))])
    res = cross_validate(spec, data, folds)
    for fit in res.fold_models:
        expect = hashlib.sha256("\n".join(sorted(fit.train_ids)).encode()).hexdigest()
        assert fit.fingerprint == expect
        assert fit.fingerprint == train_fingerprint(fit.train_ids)
        for model in fit.models:
            assert model.fit_fingerprint == expect
        held = set(folds.fold_subjects(fit.fold))
        assert held.isdisjoint(fit.train_ids)


def test_units_per_fusion_mode():
    atoms = [Atom("a", make_spec("svm")), Atom("b", make_spec("svm"))]
    vote = EnsembleSpec(atoms=atoms)
    cat = EnsembleSpec(atoms=atoms, fusion_mode="concat_features")
    assert ensemble_units(vote) == [(("a",), atoms[0].classifier), (("b",), atoms[1].classifier)]
    assert ensemble_units(cat) == [(("a", "b"), atoms[0].classifier)]
    fams = {"a": "famA", "b": "famB"}
    assert _unit_groups(vote, fams) is None  # flatten=True default
    grouped = EnsembleSpec(atoms=atoms, flatten=False)
    assert _unit_groups(grouped, fams) == ["famA", "famB"]
    assert _unit_groups(grouped, None) is None
    assert _unit_groups(cat, fams) is None


def test_derived_seeds_are_stable_and_spread():
    a = derive_seed(0, "sys", 0, 0)
    assert a == derive_seed(0, "sys", 0, 0)
    others = {derive_seed(0, "sys", f, u) for f in range(10) for u in range(5)}
    assert len(others) == 50
    assert derive_seed(1, "sys", 0, 0) != a
    assert derive_seed(0, "sys2", 0, 0) != a
    assert all(0 <= s < 2**32 for s in others)


# -- cross-fold test voting --------------------------------------------------


def _constant_fold_fits(fold_unit_labels, scaler_src):
    """FoldFits whose unit models are fixed ConstantModels (one row per fold)."""
    scaler = fit_scaler(scaler_src)
    fits = []
    for f, unit_labels in enumerate(fold_unit_labels):
        models = [
            TrainedModel(kind="svm", spec=make_spec("svm"), model=ConstantModel(int(v)),
                         seed=0, dim=scaler_src.rows.shape[1])
            for v in unit_labels
        ]
        fits.append(FoldFit(fold=f, train_ids=[], fingerprint="", scalers={"f": scaler},
                            models=models))
    return fits


def _test_matrix(n=3, d=2):
    ids = [f"t{i}" for i in range(n)]
    rows = np.random.default_rng(0).standard_normal((n, d))
    return {"f": FeatureMatrix(subject_ids=ids, rows=rows, labels=None)}


def test_nested_fold_vote_majority():
    data = _test_matrix()
    spec = EnsembleSpec(atoms=[Atom("f", make_spec("svm"))])
    fits = _constant_fold_fits([[1]] * 6 + [[0]] * 4, data["f"])
    voted = vote_over_folds(spec, fits, data)
    assert all(v == 1 for v in voted.values())
    fits = _constant_fold_fits([[0]] * 10, data["f"])
    assert all(v == 0 for v in vote_over_folds(spec, fits, data).values())


def test_even_fold_split_resolves_by_tie_break():
    data = _test_matrix()
    fits_labels = [[1]] * 5 + [[0]] * 5
    pos = EnsembleSpec(atoms=[Atom("f", make_spec("svm"))])
    neg = EnsembleSpec(atoms=[Atom("f", make_spec("svm"))], tie_break="negative")
    assert all(v == 1 for v in vote_over_folds(pos, _constant_fold_fits(fits_labels, data["f"]), data).values())
    assert all(v == 0 for v in vote_over_folds(neg, _constant_fold_fits(fits_labels, data["f"]), data).values())


def test_flat_pool_can_disagree_with_nested_vote():
    data = _test_matrix()
    atoms = [Atom("f", make_spec("svm")) for _ in range(3)]
    # folds (1,1,0), (1,1,0), (0,0,0): nested majority 1, flat pool 4/9 ones -> 0
    labels = [[1, 1, 0], [1, 1, 0], [0, 0, 0]]
    nested_spec = EnsembleSpec(atoms=atoms, fold_vote=True)
    flat_spec = EnsembleSpec(atoms=atoms, fold_vote=False)
    nested = vote_over_folds(nested_spec, _constant_fold_fits(labels, data["f"]), data)
    flat = vote_over_folds(flat_spec, _constant_fold_fits(labels, data["f"]), data)
    assert all(v == 1 for v in nested.values())
    assert all(v == 0 for v in flat.values())


def test_vote_over_folds_checks_test_subject_alignment():
    data = _test_matrix()
    other = _test_matrix(n=4)
    data["g"] = other["f"]
    spec = EnsembleSpec(atoms=[Atom("f", make_spec("svm")), Atom("g", make_spec("svm"))])
    fits = _constant_fold_fits([[1, 1]], data["f"])
    fits[0].scalers["g"] = fit_scaler(data["g"])
    with pytest.raises(SubjectMismatchError):
        vote_over_folds(spec, fits, data)


# -- reports -----------------------------------------------------------------


def _report():
    row = SystemResult(
        system_id="sys-a",
        cv_accuracy=0.875,
        cv_accuracy_mean=0.85,
        test_metrics=Metrics(tp=23, fp=2, fn=1, tn=22),
        tie_count=1,
    )
    err = SystemResult(system_id="sys-b", error="boom, with commas\nand newline")
    return ExperimentReport(digest="cafe0123", seed=11, rows=[row, err])


def test_report_csv_layout():
    text = report_csv(_report())
    lines = text.strip().split("\n")
    assert lines[0] == (
        "system_id,cv_accuracy,cv_accuracy_mean,test_accuracy,test_precision,"
        "test_recall,test_f1,ties,degenerate_folds,error"
    )
    assert lines[1] == "sys-a,87.50,85.00,93.75,92.00,95.83,93.88,1,,"
    assert lines[2] == "sys-b,,,,,,,0,,boom; with commas and newline"
    assert len(lines[2].split(",")) == 10


def test_render_report_text():
    text = render_report(_report())
    assert "config digest: cafe0123" in text
    assert "seed: 11" in text
    assert "93.75" in text and "sys-b" in text
    assert "ERROR: boom" in text


def test_cv_result_shape():
    data, labels = _train_bundle(n=20, separable=True)
    folds = make_folds(list(labels), labels, k=4, seed=0)
    spec = EnsembleSpec(atoms=[Atom("f", make_spec("xgb"))], cv_k=4)
    res = cross_validate(spec, data, folds)
    assert isinstance(res, CVResult)
    assert len(res.fold_models) == 4
    assert set(res.heldout) == set(labels)
