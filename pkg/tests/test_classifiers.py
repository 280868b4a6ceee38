import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hetbench import classifiers
from hetbench.classifiers import (
    GaussianNBConfig,
    KNNConfig,
    LinearSVMConfig,
    LogisticRegressionConfig,
    RandomForestConfig,
    Scaler,
    TrainingError,
    config_from_dict,
    config_to_dict,
    default_config,
    fit,
    fit_arrays,
    predict,
    predict_many,
    serialize,
)
from hetbench.classifiers import forest, logistic, naive_bayes, svm
from hetbench.classifiers.forest import best_split, gini_impurity, rf_bootstrap
from hetbench.classifiers.logistic import LRWeights, loss_and_grad, lr_train_step, softmax
from hetbench.datagen import FeatureVector, GenConfig, Label, derive_seed, generate_dataset
from hetbench.evaluation import fisher_yates

from oracles import knn_instance, knn_oracle, stump_instance, stump_oracle


@pytest.fixture(scope="module")
def small_data():
    return generate_dataset(GenConfig(seed=3, n_samples=400))


@pytest.fixture(scope="module")
def noiseless_500():
    return generate_dataset(GenConfig(seed=3, n_samples=500).noiseless())


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "bad",
    [
        lambda: KNNConfig(k=0),
        lambda: GaussianNBConfig(var_smoothing=0),
        lambda: LogisticRegressionConfig(learning_rate=-1),
        lambda: LogisticRegressionConfig(l2=-1e-3),
        lambda: LinearSVMConfig(lambda_=0),
        lambda: LinearSVMConfig(epochs=0),
        lambda: RandomForestConfig(n_estimators=0),
        lambda: RandomForestConfig(min_samples_split=1),
        lambda: RandomForestConfig(features_per_split=5),
        lambda: RandomForestConfig(max_depth=0),
    ],
)
def test_config_bounds(bad):
    with pytest.raises(ValueError):
        bad()


@pytest.mark.parametrize("algorithm", classifiers.ALGORITHMS)
def test_config_dict_round_trip(algorithm):
    cfg = default_config(algorithm)
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_config_from_dict_rejects_unknown_key():
    with pytest.raises(ValueError, match="depth"):
        config_from_dict({"algorithm": "knn", "depth": 3})


def test_empty_training_set_rejected():
    with pytest.raises(TrainingError):
        fit_arrays(KNNConfig(), np.empty((0, 4)), [])


def test_minmax_scaler_maps_training_rows_into_unit_box(small_data):
    s = Scaler.fit(small_data.features, "minmax")
    Z = s.transform(small_data.features)
    assert Z.min() >= 0 and Z.max() <= 1


def test_zscore_scaler_replaces_zero_sd():
    X = np.array([[1.0, 5.0, 0, 0], [3.0, 5.0, 0, 0]])
    s = Scaler.fit(X, "zscore")
    np.testing.assert_array_equal(s.scale, [1.0, 1.0, 1.0, 1.0])


# ---------------------------------------------------------------------------
# CART primitives
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("counts, expected", [([2, 2], 0.5), ([4, 0, 0, 0], 0.0), ([1, 1, 1, 1], 0.75)])
def test_gini_examples(counts, expected):
    assert gini_impurity(counts) == pytest.approx(expected, abs=1e-15)


def test_gini_rejects_empty():
    with pytest.raises(ValueError):
        gini_impurity([0, 0])


@given(st.lists(st.integers(0, 50), min_size=1, max_size=6).filter(lambda c: sum(c) > 0))
def test_gini_bounds(counts):
    g = gini_impurity(counts)
    assert 0.0 <= g <= 1.0 - 1.0 / len(counts) + 1e-12


def test_best_split_example():
    X = np.array([[1.0], [2.0], [8.0], [9.0]])
    y = np.array([0, 0, 1, 1])
    s = best_split(X, y, 2, [0])
    assert (s.feature, s.threshold, s.weighted_gini) == (0, 5.0, 0.0)


def test_best_split_no_split_cases():
    X = np.array([[1.0], [2.0], [3.0]])
    assert best_split(X, np.array([1, 1, 1]), 2, [0]) is None
    assert best_split(np.ones((4, 1)), np.array([0, 1, 0, 1]), 2, [0]) is None


def test_best_split_tie_goes_to_lower_feature():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    s = best_split(X, np.array([0, 1]), 2, [1, 0])
    assert s.feature == 0


def test_bootstrap_examples():
    idx, _ = rf_bootstrap(99, 1)
    assert list(idx) == [0]
    a, sa = rf_bootstrap(1234, 50)
    b, sb = rf_bootstrap(1234, 50)
    np.testing.assert_array_equal(a, b)
    assert sa == sb


def test_bootstrap_counts_within_3_sigma():
    n = 10_000
    idx, _ = rf_bootstrap(derive_seed(3, 0, 0), n)
    assert idx.min() >= 0 and idx.max() < n
    # 100 buckets of 100 indices: each count ~ Binomial(n, 1/100).
    buckets = np.bincount(idx // 100, minlength=100)
    sd = math.sqrt(n * 0.01 * 0.99)
    assert np.all(np.abs(buckets - n * 0.01) <= 4 * sd)
    assert np.mean(np.abs(buckets - n * 0.01) <= 3 * sd) >= 0.97
    # Per-index counts behave like Poisson(1): mean 1, variance ~1.
    counts = np.bincount(idx, minlength=n)
    assert counts.mean() == 1.0
    assert abs(counts.var() - (1 - 1 / n)) <= 3 * math.sqrt(2 / n) * 1.5


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------

def test_softmax_examples():
    np.testing.assert_allclose(softmax([0, 0, 0, 0]), [0.25] * 4, atol=1e-15)
    np.testing.assert_allclose(softmax([math.log(1), math.log(3)]), [0.25, 0.75], atol=1e-15)
    with pytest.raises(ValueError):
        softmax([])


@given(
    hnp.arrays(np.float64, st.integers(1, 6), elements=st.floats(-50, 50)),
    st.floats(-1e3, 1e3),
)
def test_softmax_shift_invariance(scores, c):
    p = softmax(scores)
    assert np.all(p > 0) and abs(p.sum() - 1) <= 1e-12
    np.testing.assert_allclose(softmax(scores + c), p, rtol=1e-9, atol=1e-12)


def test_softmax_large_scores_do_not_overflow():
    p = softmax([1000.0, 1000.0])
    np.testing.assert_allclose(p, [0.5, 0.5])


def _random_lr_problem(seed, n=8, d=4, c=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    Y = np.eye(c)[rng.integers(0, c, n)]
    w = LRWeights(rng.normal(size=(d, c)), rng.normal(size=c))
    return X, Y, w


def test_lr_zero_learning_rate_is_identity():
    X, Y, w = _random_lr_problem(0)
    new, _ = lr_train_step(w, X, Y, 0.0, 1e-3)
    np.testing.assert_array_equal(new.W, w.W)
    np.testing.assert_array_equal(new.b, w.b)


@pytest.mark.parametrize("seed", range(5))
def test_lr_gradient_matches_finite_differences(seed):
    X, Y, w = _random_lr_problem(seed)
    l2 = 0.05
    _, gW, gb = loss_and_grad(w, X, Y, l2)
    h = 1e-6

    def num(which, idx):
        plus = LRWeights(w.W.copy(), w.b.copy())
        minus = LRWeights(w.W.copy(), w.b.copy())
        getattr(plus, which)[idx] += h
        getattr(minus, which)[idx] -= h
        return (loss_and_grad(plus, X, Y, l2)[0] - loss_and_grad(minus, X, Y, l2)[0]) / (2 * h)

    for idx in np.ndindex(w.W.shape):
        n = num("W", idx)
        assert abs(gW[idx] - n) <= 1e-5 * max(abs(n), abs(gW[idx]), 1e-3)
    for idx in np.ndindex(w.b.shape):
        n = num("b", idx)
        assert abs(gb[idx] - n) <= 1e-5 * max(abs(n), abs(gb[idx]), 1e-3)


def test_lr_separable_classes_reach_full_accuracy():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(-2, 0.5, (50, 4)), rng.normal(2, 0.5, (50, 4))])
    y = np.repeat([0, 1], 50)
    model = fit_arrays(LogisticRegressionConfig(max_iter=500), X, y)
    assert np.mean(predict_many(model, X) == y) == 1.0


def test_lr_loss_monotone_at_small_learning_rate():
    data = generate_dataset(GenConfig(n_samples=2000))
    X = Scaler.fit(data.features, "zscore").transform(data.features)
    history = []
    logistic.train(X, data.labels, 4, 0.01, 1e-4, 200, -np.inf, history=history)
    assert len(history) == 200
    assert all(b <= a for a, b in zip(history[1:], history[2:]))


def test_lr_non_finite_loss_aborts():
    X, Y, w = _random_lr_problem(0)
    bad = LRWeights(w.W * np.inf, w.b)
    with np.errstate(all="ignore"), pytest.raises(TrainingError):
        lr_train_step(bad, X, Y, 0.1, 0.0)


# ---------------------------------------------------------------------------
# SVM
# ---------------------------------------------------------------------------

def test_svm_zero_epochs_gives_zero_weights_and_first_class():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 4))
    y = rng.integers(0, 3, 20)
    w = svm.train(X, y, 3, 1e-3, 0, 3)
    assert not w.W.any()
    assert set(svm.predict(w, None, rng.normal(size=(10, 4)))) == {0}


def test_svm_deterministic(small_data):
    a = fit(LinearSVMConfig(), small_data)
    b = fit(LinearSVMConfig(), small_data)
    np.testing.assert_array_equal(a.state.W, b.state.W)
    c = fit(LinearSVMConfig(shuffle_seed=4), small_data)
    assert not np.array_equal(a.state.W, c.state.W)


def test_svm_separates_distant_blobs():
    rng = np.random.default_rng(2)
    centers = np.array([[0, 0, 0, 0], [10 / math.sqrt(4)] * 4])
    X = np.vstack([rng.normal(c, 0.1, (100, 4)) for c in centers])
    y = np.repeat([0, 1], 100)
    Xt = np.vstack([rng.normal(c, 0.1, (100, 4)) for c in centers])
    model = fit_arrays(LinearSVMConfig(), X, y)
    assert np.mean(predict_many(model, Xt) == y) == 1.0


@pytest.mark.parametrize("seed, n", [(0, 1), (3, 2), (42, 17), (2**64 - 1, 300)])
def test_compiled_shuffle_matches_reference(seed, n):
    order, state = svm._shuffle(np.uint64(seed), n)
    ref, ref_state = fisher_yates(seed, n)
    assert list(order) == ref
    assert int(state) == ref_state


# ---------------------------------------------------------------------------
# Gaussian naive Bayes
# ---------------------------------------------------------------------------

def test_gnb_single_class_always_predicted():
    X = np.array([[0, 10, 20, 1.0], [1, 200, 80, 0]])
    model = fit_arrays(GaussianNBConfig(), X, [2, 2])
    assert set(predict_many(model, np.random.default_rng(0).uniform(0, 255, (30, 4)))) == {2}


def test_gnb_stats_permutation_invariant(small_data):
    perm = np.random.default_rng(5).permutation(len(small_data))
    X, y = small_data.features, small_data.labels
    a = naive_bayes.gnb_fit_stats(X, y, 4)
    b = naive_bayes.gnb_fit_stats(X[perm], y[perm], 4)
    for f in ("priors", "means", "variances"):
        np.testing.assert_allclose(getattr(a, f), getattr(b, f), rtol=1e-12)


def test_gnb_stats_hand_computed():
    # A: (1,2), (3,4)   B: (10,0), (14,2)
    X = np.array([[1.0, 2.0], [3.0, 4.0], [10.0, 0.0], [14.0, 2.0]])
    y = np.array([0, 0, 1, 1])
    s = naive_bayes.gnb_fit_stats(X, y, 2)
    np.testing.assert_array_equal(s.priors, [0.5, 0.5])
    np.testing.assert_array_equal(s.means, [[2.0, 3.0], [12.0, 1.0]])
    np.testing.assert_array_equal(s.variances, [[1.0, 1.0], [4.0, 1.0]])


def test_gnb_one_feature_example():
    X = np.array([[1.0], [1.2], [3.0], [3.2]])
    s = naive_bayes.gnb_fit_stats(X, np.array([0, 0, 1, 1]), 2)
    assert naive_bayes.predict(s, None, np.array([[1.1]]))[0] == 0


def test_gnb_variance_floor_with_constant_features():
    s = naive_bayes.gnb_fit_stats(np.ones((3, 2)), np.array([0, 1, 1]), 2, 1e-9)
    assert np.all(s.variances == 1e-9)


# ---------------------------------------------------------------------------
# KNN
# ---------------------------------------------------------------------------

def test_knn_example():
    X = [[0, 0, 10, 0], [1, 255, 90, 1]]
    model = fit_arrays(KNNConfig(k=1), X, [Label.SOLID, Label.PORE])
    assert predict(model, FeatureVector(0, 10, 12, 0)) is Label.SOLID


def test_knn_memorizes_distinct_rows(small_data):
    X, rows = np.unique(small_data.features, axis=0, return_index=True)
    model = fit_arrays(KNNConfig(k=1), X, small_data.labels[rows])
    assert np.mean(predict_many(model, X) == small_data.labels[rows]) == 1.0


@pytest.mark.parametrize("seed", range(10))
def test_knn_matches_sort_oracle(seed):
    X, y, Xq = knn_instance(seed)
    for k in (1, 4, 7):
        model = fit_arrays(KNNConfig(k=k), X, y)
        assert list(predict_many(model, Xq)) == knn_oracle(X, y, Xq, k)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(-3, 3), st.integers(-20, 20))
def test_knn_affine_invariance(seed, col, log_a, b):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 30, (60, 4)).astype(float)
    y = rng.integers(0, 4, 60)
    Xq = rng.integers(0, 30, (30, 4)).astype(float)
    a = 2.0**log_a  # exact in binary floating point
    X2, Xq2 = X.copy(), Xq.copy()
    X2[:, col] = a * X2[:, col] + b
    Xq2[:, col] = a * Xq2[:, col] + b
    for k in (1, 3):
        m1 = fit_arrays(KNNConfig(k=k), X, y)
        m2 = fit_arrays(KNNConfig(k=k), X2, y)
        np.testing.assert_array_equal(predict_many(m1, Xq), predict_many(m2, Xq2))


def test_knn_vote_ties_go_to_earliest_class():
    # Training order puts class 3 first; k=2 tie between 3 and 1.
    X = [[0, 0, 10, 0], [0, 2, 10, 0]]
    model = fit_arrays(KNNConfig(k=2), X, [3, 1])
    assert predict_many(model, [[0, 1, 10, 0]])[0] == 3


def test_knn_distance_ties_go_to_lower_row():
    X = [[0, 0, 10, 0], [0, 2, 10, 0]]
    model = fit_arrays(KNNConfig(k=1), X, [1, 3])
    assert predict_many(model, [[0, 1, 10, 0]])[0] == 1


# ---------------------------------------------------------------------------
# random forest
# ---------------------------------------------------------------------------

def test_rf_deterministic(small_data):
    a = fit(RandomForestConfig(), small_data)
    b = fit(RandomForestConfig(), small_data)
    assert [t.structure() for t in a.state.trees] == [t.structure() for t in b.state.trees]


def test_rf_all_solid():
    X = np.random.default_rng(0).uniform(0, 100, (30, 4))
    model = fit_arrays(RandomForestConfig(), X, [Label.SOLID] * 30)
    Xq = np.random.default_rng(1).uniform(-500, 500, (50, 4))
    assert set(predict_many(model, Xq)) == {int(Label.SOLID)}


def test_single_tree_fits_noiseless_data(noiseless_500):
    cfg = RandomForestConfig(n_estimators=1, features_per_split=4, bootstrap=False)
    model = fit(cfg, noiseless_500)
    assert classifiers.accuracy(model, noiseless_500) == 1.0


def test_single_bootstrapped_tree_fits_its_rows(noiseless_500):
    # Every distinct (features -> label) pair is consistent, so the tree
    # memorizes the rows its bootstrap saw.
    model = fit(RandomForestConfig(n_estimators=1), noiseless_500)
    rows, _ = rf_bootstrap(derive_seed(3, 0, 0), len(noiseless_500))
    seen = noiseless_500.subset(np.unique(rows))
    assert classifiers.accuracy(model, seen) == 1.0


@pytest.mark.parametrize("seed", range(10))
def test_rf_stump_matches_oracle(seed):
    X, y, Xq = stump_instance(seed)
    cfg = RandomForestConfig(n_estimators=1, max_depth=1, features_per_split=4, bootstrap=False)
    model = fit_arrays(cfg, X, y)
    assert list(predict_many(model, Xq)) == stump_oracle(X, y, Xq)


def _rf_pair(seed, col, fmap, **cfg):
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.integers(0, 2, 80), rng.integers(0, 256, 80), rng.integers(10, 91, 80), rng.integers(0, 2, 80)]).astype(float)
    y = rng.integers(0, 4, 80)
    X2 = X.copy()
    X2[:, col] = fmap(X2[:, col])
    return X, X2, fit_arrays(RandomForestConfig(**cfg), X, y), fit_arrays(RandomForestConfig(**cfg), X2, y)


MONOTONE_MAPS = {"cube": lambda v: v**3 + 1.0, "exp": lambda v: np.exp(v / 40.0), "affine": lambda v: 7.0 * v - 3.0}


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.sampled_from(sorted(MONOTONE_MAPS)))
def test_rf_monotone_transform_invariance(seed, col, kind):
    # Split choice depends only on value order, so tree shapes always agree.
    X, X2, m1, m2 = _rf_pair(seed, col, MONOTONE_MAPS[kind])
    strip = lambda t: [(f, lab) for f, _, lab in t.structure()]  # noqa: E731
    assert [strip(t) for t in m1.state.trees] == [strip(t) for t in m2.state.trees]
    # Without bagging every node sees every training row, and midpoint
    # thresholds sit strictly between neighbouring training values, so
    # training-row predictions are identical under any increasing map.
    X, X2, m1, m2 = _rf_pair(seed, col, MONOTONE_MAPS[kind], bootstrap=False)
    np.testing.assert_array_equal(predict_many(m1, X), predict_many(m2, X2))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(-3, 3), st.integers(-20, 20))
def test_rf_affine_invariance_everywhere(seed, col, log_a, b):
    # Positive affine maps carry midpoints to midpoints, so any query agrees.
    a = 2.0**log_a
    X, X2, m1, m2 = _rf_pair(seed, col, lambda v: a * v + b)
    Xq = np.random.default_rng(seed).integers(-5, 300, (100, 4)).astype(float)
    Xq2 = Xq.copy()
    Xq2[:, col] = a * Xq2[:, col] + b
    np.testing.assert_array_equal(predict_many(m1, Xq), predict_many(m2, Xq2))


def test_rf_truncation_equals_depth_limited_prefix(small_data):
    full = fit(RandomForestConfig(n_estimators=8), small_data)
    Xq = small_data.features
    for n_est, depth in [(1, 1), (3, 2), (6, 4), (8, None)]:
        small = fit(RandomForestConfig(n_estimators=n_est, max_depth=depth), small_data)
        assert [t.structure() for t in small.state.trees] == [
            t.structure(depth) for t in full.state.trees[:n_est]
        ]
        np.testing.assert_array_equal(
            forest.predict(small.state, None, Xq), full.state.predict(Xq, n_trees=n_est, max_depth=depth)
        )


# ---------------------------------------------------------------------------
# all models
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("algorithm", classifiers.ALGORITHMS)
def test_closed_world_predictions(algorithm):
    data = generate_dataset(GenConfig(seed=9, n_samples=200))
    keep = np.isin(data.labels, [0, 2])  # two classes only
    train = data.subset(np.flatnonzero(keep))
    model = fit(default_config(algorithm), train)
    Xq = np.random.default_rng(0).uniform([0, 0, 10, 0], [1, 255, 90, 1], (200, 4))
    assert set(predict_many(model, Xq)) <= {0, 2}
    assert set(model.classes) == {0, 2}


@pytest.mark.parametrize("algorithm", classifiers.ALGORITHMS)
def test_single_row_training(algorithm):
    model = fit_arrays(default_config(algorithm), [[1, 100, 50, 0]], [Label.PORE])
    assert predict(model, FeatureVector(0, 3, 12, 1)) is Label.PORE


@pytest.mark.parametrize("algorithm", classifiers.ALGORITHMS)
def test_serialization_round_trip(algorithm, small_data):
    model = fit(default_config(algorithm), small_data)
    restored = serialize.loads(serialize.dumps(model))
    assert restored.config == model.config and restored.classes == model.classes
    np.testing.assert_array_equal(predict_many(restored, small_data.features), predict_many(model, small_data.features))


def test_serialization_rejects_wrong_format():
    with pytest.raises(ValueError):
        serialize.model_from_dict({"format": "other", "version": 1})


@pytest.mark.parametrize("algorithm", classifiers.ALGORITHMS)
def test_model_state_is_not_mutated_by_predict(algorithm, small_data):
    model = fit(default_config(algorithm), small_data)
    before = serialize.dumps(model)
    predict_many(model, small_data.features)
    assert serialize.dumps(model) == before
