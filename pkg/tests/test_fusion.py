"""Voting laws, snapshot schemes, atom expansion, and feature concatenation."""

import itertools
from types import SimpleNamespace

import numpy as np
import pytest

from adscreen.errors import AdscreenError, ConfigError, ManifestError, SubjectMismatchError
from adscreen.feature_store import FeatureMatrix
from adscreen.fusion import (
    Atom,
    EnsembleSpec,
    SnapshotScheme,
    build_atoms,
    concat_features,
    fuse_decisions,
    load_decisions,
    majority_vote,
    parse_scheme,
    resolve_selectors,
    run_decision_vote,
    save_decisions,
    snapshot_epochs,
)
from adscreen.classifiers import make_spec


def _slow_majority(votes, tie_break):
    ones = sum(votes)
    zeros = len(votes) - ones
    if ones == zeros:
        return 1 if tie_break == "positive" else 0
    return int(ones > zeros)


def test_majority_vote_exhaustive_small_pools():
    for n in range(1, 6):
        for votes in itertools.product((0, 1), repeat=n):
            for tie in ("positive", "negative"):
                assert majority_vote(votes, tie) == _slow_majority(votes, tie)


def test_majority_vote_randomized_larger_pools():
    rng = np.random.default_rng(0)
    for _ in range(300):
        n = int(rng.integers(1, 32))
        votes = rng.integers(0, 2, size=n).tolist()
        for tie in ("positive", "negative"):
            assert majority_vote(votes, tie) == _slow_majority(votes, tie)


def test_majority_vote_rejects_bad_input():
    with pytest.raises(AdscreenError):
        majority_vote([])
    with pytest.raises(AdscreenError):
        majority_vote([0, 2])
    with pytest.raises(ConfigError):
        majority_vote([0, 1], tie_break="coin")


def test_three_independent_voters_hit_closed_form_accuracy():
    # three voters each correct with prob 0.8: majority is right with
    # 0.8^3 + 3 0.8^2 0.2 = 0.896
    closed = 0.8**3 + 3 * 0.8**2 * 0.2
    assert np.isclose(closed, 0.896, atol=1e-12)
    rng = np.random.default_rng(123)
    n = 20000
    truth = {f"s{i:05d}": int(rng.integers(0, 2)) for i in range(n)}
    vectors = []
    for _ in range(3):
        correct = rng.random(n) < 0.8
        vectors.append(
            {sid: t if ok else 1 - t for (sid, t), ok in zip(truth.items(), correct)}
        )
    fused = run_decision_vote(vectors)
    acc = sum(fused[s] == truth[s] for s in truth) / n
    assert abs(acc - 0.896) < 0.02


def test_run_decision_vote_requires_aligned_subjects():
    with pytest.raises(SubjectMismatchError):
        run_decision_vote([{"a": 1}, {"b": 1}])
    with pytest.raises(AdscreenError):
        run_decision_vote([])


def test_tie_log_records_only_split_subjects():
    v1 = {"a": 1, "b": 0, "c": 1}
    v2 = {"a": 0, "b": 0, "c": 1}
    log = []
    fused = run_decision_vote([v1, v2], tie_break="negative", tie_log=log)
    assert log == ["a"]
    assert fused == {"a": 0, "b": 0, "c": 1}


def test_grouped_vote_differs_from_flat_pool():
    base = {"s": 1}
    vectors = [dict(base) for _ in range(3)] + [{"s": 0}, {"s": 0}]
    groups = ["A", "A", "A", "B", "C"]
    # flat pool: three 1s against two 0s -> 1; grouped: A=1, B=0, C=0 -> 0
    assert fuse_decisions(vectors)["s"] == 1
    assert fuse_decisions(vectors, groups=groups)["s"] == 0
    # one distinct group collapses to the flat behavior
    assert fuse_decisions(vectors, groups=["g"] * 5)["s"] == 1


def test_fuse_decisions_group_alignment_checked():
    with pytest.raises(AdscreenError):
        fuse_decisions([{"a": 1}], groups=["x", "y"])


# -- snapshot schemes --------------------------------------------------------


def test_fixed_stride_epochs():
    assert snapshot_epochs(parse_scheme("fixed_stride(1)", 30)) == [28, 29, 30]
    assert snapshot_epochs(parse_scheme("fixed_stride(2)", 30)) == [26, 28, 30]
    assert snapshot_epochs(parse_scheme("fixed_stride", 10)) == [8, 9, 10]
    with pytest.raises(ConfigError):
        snapshot_epochs(parse_scheme("fixed_stride(2)", 4))


def test_geometric_epochs():
    # d = floor(E/10 + 1/2): E=30 -> 3, E=24 -> 2
    assert snapshot_epochs(parse_scheme("geometric", 30)) == [18, 27, 30]
    assert snapshot_epochs(parse_scheme("geometric", 24)) == [16, 22, 24]
    with pytest.raises(ConfigError):
        snapshot_epochs(parse_scheme("geometric", 4))


def test_random_epochs_are_seeded_distinct_sorted():
    for seed in range(10):
        s = SnapshotScheme("random", 30, seed=seed)
        picks = snapshot_epochs(s)
        assert picks == snapshot_epochs(s)
        assert len(set(picks)) == 3
        assert picks == sorted(picks)
        assert all(1 <= e <= 30 for e in picks)
    a = snapshot_epochs(SnapshotScheme("random", 30, seed=0))
    b = snapshot_epochs(SnapshotScheme("random", 30, seed=1))
    assert a != b
    with pytest.raises(ConfigError):
        snapshot_epochs(SnapshotScheme("random", 2))


def test_parse_scheme_rejects_malformed_text():
    with pytest.raises(ConfigError):
        parse_scheme("linear", 30)
    with pytest.raises(ConfigError):
        parse_scheme("random(3)", 30)
    with pytest.raises(ConfigError):
        parse_scheme("geometric(2)", 30)
    with pytest.raises(ConfigError):
        parse_scheme("fixed_stride(-1)", 30)


# -- ensemble description ----------------------------------------------------


def _toy_manifest():
    ids = ["bert-e28", "bert-e29", "bert-e30", "roberta-e30"]
    return {i: SimpleNamespace(id=i) for i in ids}


def test_resolve_selectors_exact_glob_order_dedup():
    man = _toy_manifest()
    assert resolve_selectors(["bert-e29"], man) == ["bert-e29"]
    assert resolve_selectors(["bert-*"], man) == ["bert-e28", "bert-e29", "bert-e30"]
    assert resolve_selectors(["roberta-e30", "bert-e28"], man) == ["roberta-e30", "bert-e28"]
    assert resolve_selectors(["bert-e30", "*-e30"], man) == ["bert-e30", "roberta-e30"]
    with pytest.raises(ManifestError):
        resolve_selectors(["albert-e30"], man)
    with pytest.raises(ManifestError):
        resolve_selectors(["albert-*"], man)


def test_build_atoms_cartesian_expansion():
    man = _toy_manifest()
    atoms = build_atoms(["bert-*"], ["svm", "lda"], man)
    assert len(atoms) == 6
    assert [a.feature_set_id for a in atoms[:2]] == ["bert-e28", "bert-e28"]
    assert [a.classifier.kind for a in atoms[:2]] == ["svm", "lda"]
    single = build_atoms(["bert-e30"], "gp", man)
    assert len(single) == 1 and single[0].classifier.kind == "gp"


def test_ensemble_spec_validation():
    a = Atom("f1", make_spec("svm"))
    b = Atom("f2", make_spec("lda"))
    with pytest.raises(ConfigError):
        EnsembleSpec(atoms=[])
    with pytest.raises(ConfigError):
        EnsembleSpec(atoms=[a], fusion_mode="stack")
    with pytest.raises(ConfigError):
        EnsembleSpec(atoms=[a], tie_break="maybe")
    with pytest.raises(ConfigError):
        EnsembleSpec(atoms=[a, b], fusion_mode="concat_features")
    spec = EnsembleSpec(atoms=[a, Atom("f2", make_spec("svm"))], fusion_mode="concat_features")
    assert spec.fusion_mode == "concat_features"


# -- feature concatenation ---------------------------------------------------


def _fm(ids, rows, labels=None):
    return FeatureMatrix(subject_ids=ids, rows=np.asarray(rows, float), labels=labels)


def test_concat_features_widens_rows():
    ids = ["a", "b"]
    one = _fm(ids, [[1.0, 2.0], [3.0, 4.0]], labels=np.array([0, 1]))
    two = _fm(ids, [[5.0], [6.0]], labels=np.array([0, 1]))
    cat = concat_features([one, two])
    assert cat.rows.shape == (2, 3)
    assert cat.rows[0].tolist() == [1.0, 2.0, 5.0]
    assert list(cat.subject_ids) == ids
    assert concat_features([one]) is one


def test_concat_features_rejects_mismatches():
    one = _fm(["a", "b"], [[1.0], [2.0]], labels=np.array([0, 1]))
    with pytest.raises(SubjectMismatchError):
        concat_features([one, _fm(["b", "a"], [[1.0], [2.0]], labels=np.array([1, 0]))])
    with pytest.raises(SubjectMismatchError):
        concat_features([one, _fm(["a", "b"], [[1.0], [2.0]], labels=np.array([1, 1]))])
    with pytest.raises(AdscreenError):
        concat_features([])


# -- decision CSV round trip -------------------------------------------------


def test_decisions_round_trip(tmp_path):
    path = str(tmp_path / "d.csv")
    decisions = {"s2": 1, "s1": 0, "s3": 1}
    save_decisions(decisions, path)
    text = open(path).read()
    assert text == "subject_id,decision\ns1,0\ns2,1\ns3,1\n"
    assert load_decisions(path) == decisions


def test_load_decisions_validates(tmp_path):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("id,decision\na,1\n")
    with pytest.raises(AdscreenError):
        load_decisions(str(bad_header))
    bad_value = tmp_path / "v.csv"
    bad_value.write_text("subject_id,decision\na,2\n")
    with pytest.raises(AdscreenError):
        load_decisions(str(bad_value))
    dup = tmp_path / "dup.csv"
    dup.write_text("subject_id,decision\na,1\na,0\n")
    with pytest.raises(AdscreenError):
        load_decisions(str(dup))
