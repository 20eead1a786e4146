import numpy as np
import pytest

from adscreen.classifiers import make_spec, predict, train_svm
from adscreen.classifiers.svm import optimal_bias, primal_objective

from oracles import svm_primal_value, svm_reference


def _instance(rng, n, separable):
    d = 2
    if separable:
        gap = rng.uniform(0.5, 2.0)
        X = np.vstack([rng.normal(-1 - gap, 0.6, (n // 2, d)),
                       rng.normal(1 + gap, 0.6, (n - n // 2, d))])
    else:
        X = np.vstack([rng.normal(-0.3, 1.0, (n // 2, d)),
                       rng.normal(0.3, 1.0, (n - n // 2, d))])
    y = np.array([0] * (n // 2) + [1] * (n - n // 2))
    return X, y


def test_symmetric_pair():
    X = np.array([[-1.0], [1.0]])
    y = np.array([0, 1])
    m = train_svm(X, y, make_spec("svm"))
    assert m.model.w[0] > 0
    assert np.array_equal(predict(m, X), y)


def test_matches_qp_oracle_decisions():
    rng = np.random.default_rng(11)
    X, y = _instance(rng, 20, separable=True)
    m = train_svm(X, y, make_spec("svm"))
    w_ref, b_ref, _, _ = svm_reference(X, y, C=1.0)
    ours = X @ m.model.w + m.model.b
    ref = X @ w_ref + b_ref
    assert np.abs(ours - ref).max() < 1e-3


def test_primal_objective_near_oracle_nonseparable():
    rng = np.random.default_rng(4)
    X, y = _instance(rng, 60, separable=False)
    m = train_svm(X, y, make_spec("svm"))
    _, _, primal_ref, _ = svm_reference(X, y, C=1.0)
    ours = svm_primal_value(m.model.w, m.model.b, X, y, C=1.0)
    assert ours <= primal_ref * (1 + 1e-4) + 1e-10
    assert abs(ours - primal_ref) / max(primal_ref, 1e-12) < 1e-4


def test_primal_objective_helper_agrees_with_oracle_formula():
    rng = np.random.default_rng(8)
    X, y = _instance(rng, 30, separable=False)
    m = train_svm(X, y, make_spec("svm"))
    assert np.isclose(
        primal_objective(X, y, m.model.w, m.model.b, 1.0),
        svm_primal_value(m.model.w, m.model.b, X, y, 1.0),
    )


def test_optimal_bias_midpoint_of_flat_region():
    # two points, both margins satisfiable on an interval; bias sits mid-flat
    z = np.array([2.0, -2.0])
    y = np.array([1.0, -1.0])
    b = optimal_bias(z, y, C=1.0)
    assert b == pytest.approx(0.0)
    # shifting scores shifts the bias the opposite way
    assert optimal_bias(z + 0.5, y, C=1.0) == pytest.approx(-0.5)


def test_single_class_constant_fallback():
    X = np.random.default_rng(0).standard_normal((5, 3))
    m = train_svm(X, np.ones(5, dtype=int), make_spec("svm"))
    assert m.degenerate
    assert np.array_equal(predict(m, X), np.ones(5, dtype=int))


def test_duplicate_points_do_not_break_solver():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
    y = np.array([0, 0, 1, 1])
    m = train_svm(X, y, make_spec("svm"))
    assert np.array_equal(predict(m, X), y)


def test_deterministic():
    rng = np.random.default_rng(2)
    X, y = _instance(rng, 40, separable=False)
    m1 = train_svm(X, y, make_spec("svm"))
    m2 = train_svm(X, y, make_spec("svm"))
    assert np.array_equal(m1.model.w, m2.model.w)
    assert m1.model.b == m2.model.b


def test_decision_tie_goes_positive():
    m = train_svm(np.array([[-1.0], [1.0]]), np.array([0, 1]), make_spec("svm"))
    # by symmetry the boundary passes through 0
    assert predict(m, np.array([[0.0]]))[0] == 1
