import numpy as np
import pytest

from archevo.genome import CONV2D, CONV3D, FIELD_DOMAINS, Genome, P3D
from archevo.surrogate import (
    ForestRegressor,
    ForestSettings,
    GenomeEncoder,
    InsufficientDataError,
    N_FEATURES,
)


def make(**overrides) -> Genome:
    base = dict(
        i2=0, i3=0, i4=0, o1=CONV2D, o2=CONV2D, o3=CONV2D, o4=CONV2D,
        n_c=2, n_f=3, lr_level=4,
    )
    base.update(overrides)
    return Genome(**base)


def sum_of_features_data(n_train=500, n_test=100, d=8, seed=0):
    """A dense continuous target for the mechanical forest tests."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n_train + n_test, d))
    y = X.sum(axis=1)
    return X[:n_train], y[:n_train], X[n_train:], y[n_train:]


def random_genomes(n, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        values = []
        for name in Genome.__dataclass_fields__:
            domain = FIELD_DOMAINS[name]
            values.append(domain[rng.integers(len(domain))])
        out.append(Genome(*values))
    return out


def encoded_sum_data(n_train=500, n_test=100, seed=0):
    """The reference quality target: y = sum of encoded genome features."""
    X = GenomeEncoder().transform(random_genomes(n_train + n_test, seed))
    y = X.sum(axis=1)
    return X[:n_train], y[:n_train], X[n_train:], y[n_train:]


class TestEncoder:
    def test_feature_count(self):
        assert N_FEATURES == 24
        assert GenomeEncoder().transform([make()]).shape == (1, 24)

    def test_one_hot_blocks(self):
        row = GenomeEncoder().transform([make(i2=1, i3=2, i4=0)])[0]
        # i2 block: columns 0..1, i3 block: 2..4, i4 block: 5..8
        assert row[0:2].tolist() == [0.0, 1.0]
        assert row[2:5].tolist() == [0.0, 0.0, 1.0]
        assert row[5:9].tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_operation_blocks_follow_domain_order(self):
        row = GenomeEncoder().transform([make(o1=P3D, o2=CONV3D)])[0]
        # operations domain order is (CONV2D, CONV3D, P3D)
        assert row[9:12].tolist() == [0.0, 0.0, 1.0]
        assert row[12:15].tolist() == [0.0, 1.0, 0.0]

    def test_ordinals_kept_raw(self):
        row = GenomeEncoder().transform([make(n_c=4, n_f=5, lr_level=9)])[0]
        assert row[21:24].tolist() == [4.0, 5.0, 9.0]

    def test_each_one_hot_block_sums_to_one(self):
        row = GenomeEncoder().transform([make(i2=1, i3=1, i4=3, o3=P3D)])[0]
        bounds = [(0, 2), (2, 5), (5, 9), (9, 12), (12, 15), (15, 18), (18, 21)]
        for lo, hi in bounds:
            assert row[lo:hi].sum() == 1.0

    def test_injective_on_distinct_genomes(self):
        genomes = [
            make(), make(i2=1), make(o1=CONV3D), make(n_f=4), make(lr_level=5),
            make(i4=3, o4=P3D), make(n_c=3),
        ]
        rows = GenomeEncoder().transform(genomes)
        assert len({tuple(r) for r in rows}) == len(genomes)

    def test_empty_input(self):
        assert GenomeEncoder().transform([]).shape == (0, 24)

    def test_feature_names_align_with_columns(self):
        names = GenomeEncoder().get_feature_names_out()
        assert len(names) == 24
        assert names[0] == "i2=0"
        assert names[9] == "o1=CONV2D"
        assert list(names[21:]) == ["n_c", "n_f", "lr_level"]

    def test_transform_is_deterministic(self):
        genomes = [make(lr_level=k) for k in FIELD_DOMAINS["lr_level"]]
        a = GenomeEncoder().transform(genomes)
        b = GenomeEncoder().transform(genomes)
        assert np.array_equal(a, b)


class TestForestSettings:
    def test_defaults(self):
        s = ForestSettings()
        assert (s.n_estimators, s.min_samples_split, s.max_features) == (100, 5, "third")

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_estimators=0),
            dict(min_samples_split=1),
            dict(max_features="half"),
            dict(max_features=0),
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            ForestSettings(**kwargs)

    def test_third_of_genome_features(self):
        assert ForestRegressor(max_features="third")._resolved_mtry(N_FEATURES) == 8

    def test_explicit_mtry_clamped(self):
        assert ForestRegressor(max_features=99)._resolved_mtry(10) == 10
        assert ForestRegressor(max_features=3)._resolved_mtry(10) == 3


class TestForestBasics:
    def test_constant_target_predicts_constant_with_zero_spread(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(size=(40, 6))
        y = np.full(40, 2.5)
        forest = ForestRegressor(n_estimators=30, random_state=0).fit(X, y)
        mean, std = forest.predict(X[:10], return_std=True)
        assert np.allclose(mean, 2.5)
        assert np.all(std == 0.0)

    def test_single_repeated_sample_behaves_like_constant(self):
        X = np.tile([[0.3, 0.7]], (10, 1))
        y = np.full(10, 1.25)
        forest = ForestRegressor(n_estimators=10, random_state=0).fit(X, y)
        mean, std = forest.predict([[0.3, 0.7], [9.0, -9.0]], return_std=True)
        assert np.allclose(mean, 1.25)
        assert np.all(std == 0.0)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            ForestRegressor().fit(np.zeros((1, 4)), np.zeros(1))

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            ForestRegressor().fit(np.zeros(5), np.zeros(5))
        with pytest.raises(ValueError):
            ForestRegressor().fit(np.zeros((5, 3)), np.zeros(4))

    def test_predict_requires_fit(self):
        with pytest.raises(RuntimeError):
            ForestRegressor().predict(np.zeros((2, 3)))

    def test_predict_validates_width(self):
        X, y, _, _ = sum_of_features_data(n_train=50, n_test=1)
        forest = ForestRegressor(n_estimators=5, random_state=0).fit(X, y)
        with pytest.raises(ValueError):
            forest.predict(np.zeros((2, 3)))

    def test_predictions_within_target_range(self):
        X, y, X_test, _ = sum_of_features_data(n_train=200, n_test=50, seed=3)
        forest = ForestRegressor(n_estimators=25, random_state=1).fit(X, y)
        pred = forest.predict(X_test)
        assert pred.min() >= y.min() - 1e-12
        assert pred.max() <= y.max() + 1e-12

    def test_single_tree_has_zero_dispersion(self):
        X, y, X_test, _ = sum_of_features_data(n_train=100, n_test=20)
        forest = ForestRegressor(n_estimators=1, random_state=0).fit(X, y)
        _, std = forest.predict(X_test, return_std=True)
        assert np.all(std == 0.0)

    def test_dispersion_nonnegative_and_usually_positive(self):
        X, y, X_test, _ = sum_of_features_data(seed=5)
        forest = ForestRegressor(n_estimators=40, random_state=2).fit(X, y)
        _, std = forest.predict(X_test, return_std=True)
        assert np.all(std >= 0.0)
        assert std.mean() > 0.0


class TestDeterminism:
    def test_same_seed_same_forest_bitwise(self):
        X, y, X_test, _ = sum_of_features_data(n_train=150, n_test=30)
        a = ForestRegressor(n_estimators=20, random_state=77).fit(X, y)
        b = ForestRegressor(n_estimators=20, random_state=77).fit(X, y)
        assert np.array_equal(a.feature_, b.feature_)
        assert np.array_equal(a.threshold_, b.threshold_)
        assert np.array_equal(a.value_, b.value_)
        assert np.array_equal(a.node_counts_, b.node_counts_)
        assert np.array_equal(a.predict(X_test), b.predict(X_test))

    def test_different_seeds_differ(self):
        X, y, X_test, _ = sum_of_features_data(n_train=150, n_test=30)
        a = ForestRegressor(n_estimators=20, random_state=1).fit(X, y)
        b = ForestRegressor(n_estimators=20, random_state=2).fit(X, y)
        assert not np.array_equal(a.predict(X_test), b.predict(X_test))

    def test_bootstrap_is_seeded(self):
        X, y, _, _ = sum_of_features_data(n_train=60, n_test=1)
        a = ForestRegressor(n_estimators=4, random_state=9).fit(X, y)
        b = ForestRegressor(n_estimators=4, random_state=9).fit(X, y)
        assert np.array_equal(a.bootstrap_indices_, b.bootstrap_indices_)
        assert a.bootstrap_indices_.shape == (4, 60)


class TestForestQuality:
    def test_r2_on_additive_target(self):
        # 500 encoded genomes train, 100 held out, y = sum of features
        X, y, X_test, y_test = encoded_sum_data()
        forest = ForestRegressor(random_state=0).fit(X, y)
        pred = forest.predict(X_test)
        ss_res = float(np.sum((pred - y_test) ** 2))
        ss_tot = float(np.sum((y_test - y_test.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot
        assert r2 >= 0.8

    def test_score_method_agrees(self):
        # the sklearn mixin's score() must see our predict()
        X, y, X_test, y_test = encoded_sum_data()
        forest = ForestRegressor(random_state=0).fit(X, y)
        assert forest.score(X_test, y_test) >= 0.8

    def test_interpolates_training_means_reasonably(self):
        X, y, _, _ = sum_of_features_data(n_train=300, n_test=1, seed=11)
        forest = ForestRegressor(random_state=4).fit(X, y)
        pred = forest.predict(X)
        assert float(np.mean(np.abs(pred - y))) < 0.35

    def test_genome_pipeline_learns_size_objective(self):
        # end-to-end encoder + forest on a structured genome target
        from archevo.genome import count_params, decode
        import math

        rng = np.random.default_rng(0)
        genomes = []
        for _ in range(400):
            values = [rng.choice(FIELD_DOMAINS[n]) for n in ("i2", "i3", "i4")]
            ops = [str(rng.choice(FIELD_DOMAINS["o1"])) for _ in range(4)]
            rest = [rng.choice(FIELD_DOMAINS[n]) for n in ("n_c", "n_f", "lr_level")]
            genomes.append(Genome(int(values[0]), int(values[1]), int(values[2]),
                                  *ops, int(rest[0]), int(rest[1]), int(rest[2])))
        X = GenomeEncoder().transform(genomes)
        y = np.array([math.log(count_params(decode(g), 4)) for g in genomes])
        forest = ForestRegressor(n_estimators=60, random_state=3).fit(X[:320], y[:320])
        pred = forest.predict(X[320:])
        resid = np.abs(pred - y[320:])
        assert float(resid.mean()) < 0.4
