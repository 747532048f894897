"""Native classifiers: forest, boosting, logistic baseline."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.linear_model import LogisticRegression

from adepred.errors import ConfigError, DataError
from adepred.estimators import GradientBoosting, LogisticModel, RandomForest

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0, 1, 1, 0])

ALL_KINDS = [
    lambda **kw: RandomForest(n_trees=25, **kw),
    lambda **kw: GradientBoosting(n_trees=25, **kw),
    lambda **kw: LogisticModel(**kw),
]


def noise_problem(seed, n=80, p=6):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = rng.integers(0, 2, size=n)
    y[0], y[1] = 0, 1  # guarantee both classes
    return X, y


def signal_problem(seed, n=120, p=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = (X[:, 0] + 0.5 * X[:, 1] + 0.3 * rng.normal(size=n) > 0).astype(int)
    if y.min() == y.max():  # pragma: no cover - seeds below never degenerate
        y[0] = 1 - y[0]
    return X, y


class TestValidation:
    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_single_class_rejected(self, make):
        with pytest.raises(DataError, match="single class"):
            make().fit(np.zeros((4, 2)), np.zeros(4))

    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_zero_columns_rejected(self, make):
        with pytest.raises(DataError, match="no feature columns"):
            make().fit(np.zeros((4, 0)), np.array([0, 1, 0, 1]))

    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_non_binary_labels_rejected(self, make):
        with pytest.raises(DataError, match="0/1"):
            make().fit(np.zeros((3, 1)), np.array([0, 1, 2]))

    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_scoring_column_count_checked(self, make):
        model = make().fit(XOR_X, XOR_Y)
        with pytest.raises(DataError, match="feature columns"):
            model.predict_proba(np.zeros((2, 3)))

    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_misaligned_sample_weight_rejected(self, make):
        with pytest.raises(DataError, match="aligned"):
            make().fit(XOR_X, XOR_Y, sample_weight=np.ones(3))

    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_negative_sample_weight_rejected(self, make):
        with pytest.raises(DataError, match="non-negative"):
            make().fit(XOR_X, XOR_Y, sample_weight=np.array([1, 1, 1, -1.0]))

    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_unknown_class_weight_rejected(self, make):
        with pytest.raises(ConfigError, match="class_weight"):
            make(class_weight="equal").fit(XOR_X, XOR_Y)

    def test_bad_tree_counts_rejected(self):
        with pytest.raises(ConfigError, match="n_trees"):
            RandomForest(n_trees=0).fit(XOR_X, XOR_Y)
        with pytest.raises(ConfigError, match="n_trees"):
            GradientBoosting(n_trees=-1).fit(XOR_X, XOR_Y)

    def test_bad_learning_rate_rejected(self):
        with pytest.raises(ConfigError, match="learning_rate"):
            GradientBoosting(learning_rate=0.0).fit(XOR_X, XOR_Y)

    def test_negative_penalty_rejected(self):
        with pytest.raises(ConfigError, match="l2_penalty"):
            LogisticModel(l2_penalty=-1.0).fit(XOR_X, XOR_Y)

    def test_bad_features_per_split_rejected(self):
        with pytest.raises(ConfigError, match="features_per_split"):
            RandomForest(features_per_split="half").fit(XOR_X, XOR_Y)


class TestSklearnContract:
    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_fit_returns_self_and_sets_attrs(self, make):
        model = make()
        assert model.fit(XOR_X, XOR_Y) is model
        assert model.classes_.tolist() == [0, 1]
        assert model.n_features_in_ == 2

    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_cloneable(self, make):
        model = make(seed=9)
        twin = clone(model)
        assert twin.get_params() == model.get_params()

    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_proba_layout(self, make):
        proba = make().fit(XOR_X, XOR_Y).predict_proba(XOR_X)
        assert proba.shape == (4, 2)
        assert np.allclose(proba.sum(axis=1), 1.0)
        assert np.all((proba >= 0) & (proba <= 1))

    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_predict_thresholds_at_half(self, make):
        model = make().fit(XOR_X, XOR_Y)
        proba = model.predict_proba(XOR_X)[:, 1]
        assert model.predict(XOR_X).tolist() == (proba >= 0.5).astype(int).tolist()

    @pytest.mark.parametrize("make", ALL_KINDS)
    def test_scoring_zero_rows(self, make):
        model = make().fit(XOR_X, XOR_Y)
        assert model.predict_proba(np.zeros((0, 2))).shape == (0, 2)


class TestRandomForest:
    def test_xor_is_learned_exactly(self):
        model = RandomForest(n_trees=50, seed=3).fit(XOR_X, XOR_Y)
        assert model.predict(XOR_X).tolist() == XOR_Y.tolist()

    def test_refit_is_bit_identical(self):
        X, y = signal_problem(0)
        a = RandomForest(n_trees=30, seed=5).fit(X, y)
        b = RandomForest(n_trees=30, seed=5).fit(X, y)
        assert np.array_equal(a.predict_proba(X), b.predict_proba(X))
        assert np.array_equal(a.feature_importances_, b.feature_importances_)

    def test_seed_changes_the_model(self):
        X, y = signal_problem(1)
        a = RandomForest(n_trees=30, seed=0).fit(X, y).predict_proba(X)
        b = RandomForest(n_trees=30, seed=1).fit(X, y).predict_proba(X)
        assert not np.array_equal(a, b)

    def test_fit_does_not_consume_global_numpy_rng(self):
        np.random.seed(123)
        expected = np.random.rand()
        np.random.seed(123)
        RandomForest(n_trees=5, seed=0).fit(*signal_problem(2))
        assert np.random.rand() == expected

    def test_huge_leaves_force_stumps(self):
        X, y = signal_problem(3, n=10)
        model = RandomForest(n_trees=10, min_samples_leaf=6, seed=0).fit(X, y)
        proba = model.predict_proba(X)[:, 1]
        assert np.all(proba == proba[0])
        assert np.all(model.feature_importances_ == 0.0)

    def test_explicit_feature_budget(self):
        X, y = signal_problem(4)
        model = RandomForest(n_trees=10, features_per_split=2, seed=0).fit(X, y)
        assert model.predict_proba(X).shape == (len(y), 2)


class TestGradientBoosting:
    def test_xor_separates(self):
        model = GradientBoosting(n_trees=30, max_depth=2, seed=0).fit(XOR_X, XOR_Y)
        proba = model.predict_proba(XOR_X)[:, 1]
        assert min(proba[1], proba[2]) > max(proba[0], proba[3])

    def test_base_score_is_log_odds_of_base_rate(self):
        X, y = signal_problem(5)
        model = GradientBoosting(n_trees=1).fit(X, y)
        rate = y.mean()
        assert model.base_score_ == pytest.approx(np.log(rate / (1 - rate)))

    def test_balanced_weights_zero_the_base_score(self):
        X, y = signal_problem(6)
        model = GradientBoosting(n_trees=1, class_weight="balanced").fit(X, y)
        assert model.base_score_ == pytest.approx(0.0, abs=1e-12)

    def test_refit_is_bit_identical(self):
        X, y = signal_problem(7)
        a = GradientBoosting(n_trees=20).fit(X, y)
        b = GradientBoosting(n_trees=20).fit(X, y)
        assert np.array_equal(a.predict_proba(X), b.predict_proba(X))

    def test_more_stages_fit_training_data_harder(self):
        X, y = signal_problem(8)
        few = GradientBoosting(n_trees=2).fit(X, y).decision_function(X)
        many = GradientBoosting(n_trees=60).fit(X, y).decision_function(X)

        def logloss(scores):
            p = 1.0 / (1.0 + np.exp(-scores))
            return -np.mean(y * np.log(p) + (1 - y) * np.log1p(-p))

        assert logloss(many) < logloss(few)


def column_permutation_case(make, seed):
    X, y = signal_problem(seed)
    perm = np.array([3, 0, 4, 1, 2])
    base = make().fit(X, y).predict_proba(X)
    permuted = make().fit(X[:, perm], y).predict_proba(X[:, perm])
    return base, permuted


class TestSplitTieBreaking:
    def test_boosting_is_column_order_invariant(self):
        # Stage trees see continuous residuals, so split scores are tie-free
        # and the unique best split is found no matter which column holds it.
        base, permuted = column_permutation_case(
            lambda: GradientBoosting(n_trees=15), seed=9
        )
        assert np.array_equal(base, permuted)

    def test_gini_ties_resolve_to_the_lowest_column(self):
        # Both columns separate the classes perfectly in any bootstrap
        # resample, so every split everywhere is an exact score tie.
        X = np.array([[0.0, 10.0], [0.0, 10.0], [1.0, 11.0], [1.0, 11.0]] * 5)
        y = np.array([0, 0, 1, 1] * 5)
        model = RandomForest(
            n_trees=20, features_per_split="all", seed=0
        ).fit(X, y)
        split_features = {
            int(f) for tree in model.trees_ for f in tree[0] if f >= 0
        }
        assert split_features == {0}


class TestImportances:
    @pytest.mark.parametrize(
        "make",
        [lambda: RandomForest(n_trees=40, seed=2), lambda: GradientBoosting(n_trees=40)],
    )
    def test_sum_to_one_and_constant_columns_get_zero(self, make):
        X, y = signal_problem(11)
        X = X.copy()
        X[:, 3] = 7.5  # constant column can never split
        model = make().fit(X, y)
        imp = model.feature_importances_
        assert abs(imp.sum() - 1.0) <= 1e-9
        assert imp[3] == 0.0
        assert np.all(imp >= 0)

    def test_single_informative_column_takes_everything(self):
        rng = np.random.default_rng(12)
        X = np.zeros((60, 4))
        X[:, 2] = rng.normal(size=60)
        y = (X[:, 2] > 0).astype(int)
        imp = RandomForest(n_trees=20, seed=0).fit(X, y).feature_importances_
        assert imp[2] == pytest.approx(1.0)

    def test_pure_noise_importances_stay_near_uniform(self):
        p = 6
        totals = np.zeros(p)
        for seed in range(10):
            X, y = noise_problem(seed, n=100, p=p)
            model = RandomForest(n_trees=50, seed=seed).fit(X, y)
            totals += model.feature_importances_
        mean_imp = totals / 10
        assert np.all(mean_imp < 3.0 / p)
        assert mean_imp.sum() == pytest.approx(1.0, abs=1e-9)


class TestLogisticModel:
    def test_matches_reference_solver(self):
        X, y = signal_problem(13)
        for penalty in (0.5, 1.0, 4.0):
            ours = LogisticModel(l2_penalty=penalty).fit(X, y)
            ref = LogisticRegression(
                C=1.0 / penalty, solver="lbfgs", tol=1e-12, max_iter=20_000
            ).fit(X, y)
            assert ours.coef_ == pytest.approx(ref.coef_[0], rel=2e-4, abs=2e-5)
            assert ours.intercept_ == pytest.approx(
                ref.intercept_[0], rel=2e-4, abs=2e-5
            )

    def test_positive_signal_gets_positive_coefficient(self):
        rng = np.random.default_rng(14)
        x = rng.normal(size=200)
        y = (x + 0.2 * rng.normal(size=200) > 0).astype(int)
        model = LogisticModel(l2_penalty=1.0).fit(x.reshape(-1, 1), y)
        assert model.coef_[0] > 0
        assert model.n_iter_ < 50

    def test_xor_is_not_linearly_separable(self):
        model = LogisticModel(l2_penalty=1.0).fit(XOR_X, XOR_Y)
        proba = model.predict_proba(XOR_X)[:, 1]
        assert np.all(np.abs(proba - 0.5) < 0.2)

    def test_balanced_weights_shift_the_intercept(self):
        rng = np.random.default_rng(15)
        X = rng.normal(size=(200, 2))
        y = np.zeros(200, dtype=int)
        y[:40] = 1  # 20% positive
        plain = LogisticModel().fit(X, y)
        balanced = LogisticModel(class_weight="balanced").fit(X, y)
        assert balanced.intercept_ > plain.intercept_
        assert abs(balanced.intercept_) < abs(plain.intercept_)
