import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from irisct.classify import (
    BINARY_THRESHOLD,
    SVMModel,
    cascade_match,
    euclidean,
    hamming,
    svm_decision,
    svm_predict,
    svm_train,
    threshold_match,
    trit_distance,
)
from irisct.errors import DegenerateLabels, DimMismatch, EmptyMask

bits = st.integers(1, 64).flatmap(lambda n: st.tuples(
    *[arrays(np.int8, n, elements=st.integers(0, 1)) for _ in range(3)]))


# ---------------------------------------------------------------- hamming

def test_hamming_identical_and_complement(rng):
    a = rng.integers(0, 2, 100)
    assert hamming(a, a) == 0
    assert hamming(a, 1 - a) == 1


def test_hamming_masked_example():
    assert hamming([1, 0, 1, 0], [1, 0, 0, 0], [1, 1, 1, 0], [1, 1, 1, 0]) == pytest.approx(1 / 3)


def test_hamming_empty_mask():
    with pytest.raises(EmptyMask):
        hamming([1, 0], [0, 1], [0, 1], [1, 0])


def test_hamming_length_mismatch():
    with pytest.raises(DimMismatch):
        hamming([1, 0], [1, 0, 1])


@given(bits)
def test_hamming_pseudometric(abc):
    a, b, c = abc
    assert hamming(a, b) == hamming(b, a)
    assert hamming(a, a) == 0
    assert hamming(a, c) <= hamming(a, b) + hamming(b, c) + 1e-12


@given(bits, bits)
def test_hamming_masked_symmetry(abc, masks):
    a, b, _ = abc
    ma, mb, _ = masks
    n = min(a.size, ma.size)
    a, b, ma, mb = a[:n], b[:n], ma[:n], mb[:n]
    if not (ma & mb).any():
        return
    assert hamming(a, b, ma, mb) == hamming(b, a, mb, ma)
    # identical on the jointly valid bits means distance zero
    b2 = np.where(ma & mb, a, 1 - a)
    assert hamming(a, b2, ma, mb) == 0


# ---------------------------------------------------------------- trits / euclidean

def test_trit_examples():
    assert trit_distance([1, 0, -1], [1, 0, -1]) == 0
    assert trit_distance(np.ones(9), -np.ones(9)) == 1
    assert trit_distance([1, 0, -1], [1, 1, -1]) == pytest.approx(1 / 3)


def test_euclidean_examples(rng):
    assert euclidean([0, 0], [3, 4]) == 5
    a = rng.standard_normal(50)
    assert euclidean(a, a) == 0
    b = rng.standard_normal(50)
    assert euclidean(a, b) == pytest.approx(oracles.euclid_loops(a, b), abs=1e-12)


def test_threshold_match():
    assert threshold_match(0.42).accepted
    assert not threshold_match(0.4200001).accepted
    assert BINARY_THRESHOLD == 0.42


# ---------------------------------------------------------------- cascade

def combined(local, glob):
    return np.concatenate([np.asarray(local, dtype=float), np.asarray(glob, dtype=float)])


def test_cascade_identical_accepts(rng):
    v = combined(rng.integers(-1, 2, 2520), rng.standard_normal(24))
    r = cascade_match(v, v)
    assert r.accepted and r.stage == "local" and r.distance == 0


def test_cascade_complement_rejects_locally():
    a = combined(np.ones(2520), np.zeros(24))
    b = combined(-np.ones(2520), np.zeros(24))
    r = cascade_match(a, b, t_global=1e9)
    assert not r.accepted and r.stage == "local"


def test_cascade_gray_zone_uses_global(rng):
    local = rng.integers(-1, 2, 2520)
    other = local.copy()
    flip = rng.choice(2520, 1008, replace=False)      # d_local = 0.4
    other[flip] = np.where(other[flip] == 1, 0, 1)
    g = rng.standard_normal(24)
    near = cascade_match(combined(local, g), combined(other, g + 0.01), t_global=1.0)
    far = cascade_match(combined(local, g), combined(other, g + 5.0), t_global=1.0)
    assert near.stage == far.stage == "global"
    assert near.accepted and not far.accepted


@given(st.floats(0, 1), st.integers(0, 2520))
def test_cascade_equal_thresholds_reduce_to_trit_threshold(t, n_diff):
    a = np.zeros(2544)
    b = a.copy()
    b[:n_diff] = 1
    b[2520:] = 100.0
    r = cascade_match(a, b, t, t, t_global=1e9)
    d = trit_distance(a[:2520], b[:2520])
    assert r.stage == "local"
    assert r.accepted == (d <= t)


def test_cascade_threshold_order():
    with pytest.raises(ValueError):
        cascade_match(np.zeros(2544), np.zeros(2544), 0.6, 0.5)


# ---------------------------------------------------------------- SVM

def blobs(rng, n=20):
    X = np.vstack([rng.normal([-2, -2], 0.3, (n, 2)), rng.normal([2, 2], 0.3, (n, 2))])
    return X, np.repeat([0, 1], n)


XOR_X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
XOR_Y = np.array([0, 0, 1, 1])


def test_separable_training_accuracy(rng):
    X, y = blobs(rng)
    model = svm_train(X, y)
    assert np.all(svm_predict(model, X) == y)


def test_xor_rbf_vs_linear():
    rbf = svm_train(XOR_X, XOR_Y, C=100, kernel="rbf", gamma=2.0)
    assert np.all(svm_predict(rbf, XOR_X) == XOR_Y)
    lin = svm_train(XOR_X, XOR_Y, C=100, kernel="linear")
    assert np.mean(svm_predict(lin, XOR_X) == XOR_Y) <= 0.75


def test_xor_rbf_default_gamma():
    model = svm_train(XOR_X, XOR_Y, C=100, kernel="rbf")
    assert np.all(svm_predict(model, XOR_X) == XOR_Y)


def test_single_class_degenerate():
    with pytest.raises(DegenerateLabels):
        svm_train(np.zeros((3, 2)), [1, 1, 1])


def test_predict_dim_mismatch(rng):
    X, y = blobs(rng)
    with pytest.raises(DimMismatch):
        svm_predict(svm_train(X, y), np.zeros(3))


def test_multiclass_one_vs_rest(rng):
    centres = np.array([[0, 4], [4, 0], [-4, -4]])
    X = np.vstack([rng.normal(c, 0.4, (15, 2)) for c in centres])
    y = np.repeat(["a", "b", "c"], 15)
    model = svm_train(X, y, kernel="rbf")
    assert np.all(svm_predict(model, X) == y)
    assert svm_predict(model, [0.1, 3.9]) == "a"


def test_argmax_invariant_under_positive_scaling(rng):
    centres = np.array([[0, 3], [3, 0], [-3, -3]])
    X = np.vstack([rng.normal(c, 1.2, (15, 2)) for c in centres])
    y = np.repeat([0, 1, 2], 15)
    model = svm_train(X, y)
    probes = rng.normal(0, 3, (200, 2))
    for c in (0.01, 3.0, 1e4):
        scaled = SVMModel(model.classes, model.X, c * model.dual, c * model.rho,
                          model.kernel, model.gamma, model.C)
        np.testing.assert_allclose(svm_decision(scaled, probes), c * svm_decision(model, probes))
        np.testing.assert_array_equal(svm_predict(scaled, probes), svm_predict(model, probes))


def test_support_vector_sign_matches_label(rng):
    X, y = blobs(rng)
    model = svm_train(X, y, C=10)
    support = np.flatnonzero(np.abs(model.dual[1]) > 1e-8)
    assert support.size >= 2
    scores = svm_decision(model, X[support])[:, 1]
    np.testing.assert_array_equal(scores > 0, y[support] == 1)
    # on the margin the decision value is close to the label
    np.testing.assert_allclose(np.abs(scores), 1, atol=1e-2)


def test_ties_go_to_lowest_class():
    model = SVMModel(np.array([0, 1]), np.zeros((1, 2)), np.zeros((2, 1)), np.zeros(2),
                     "linear", 1.0, 1.0)
    assert svm_predict(model, [5.0, -1.0]) == 0


def test_training_is_deterministic(rng):
    X, y = blobs(rng)
    a, b = svm_train(X, y), svm_train(X, y)
    np.testing.assert_array_equal(a.dual, b.dual)
