import numpy as np
import pytest

from spinex.data import CLASSIFICATION, REGRESSION, Dataset
from spinex.ensemble import (
    EnsembleModel,
    fit_bagging,
    fit_boosting,
    fit_stacking,
    stacking_meta_features,
)
from spinex.errors import TooFewRowsForFolds
from spinex.modelio import serialize
from spinex.predictor import fit

from conftest import make_classification, make_regression
from test_predictor import plain_config


def single_point_model(x, y, task):
    d = Dataset([[float(x)]], [y], ["a"], task)
    return fit(plain_config(n_neighbors=1), d)


class TestBagging:
    def test_degenerate_single_member_equals_base(self):
        d = make_regression(25, 3, seed=40)
        base = fit(plain_config(), d)
        em = fit_bagging(plain_config(), d, p=1, sample_fraction=1.0, seed=0,
                         deterministic_full_sample=True)
        q = d.features[:10]
        assert np.array_equal(em.predict(q), base.predict(q))

    def test_majority_vote(self):
        # members memorize single rows: votes are (0, 0, 1) everywhere
        members = [single_point_model(0, 0, CLASSIFICATION),
                   single_point_model(1, 0, CLASSIFICATION),
                   single_point_model(2, 1, CLASSIFICATION)]
        em = EnsembleModel(kind="bagging", task=CLASSIFICATION, members=members,
                           feature_names=["a"], class_labels=np.array([0, 1]))
        assert em.predict([[5.0]])[0] == 0

    def test_regression_member_mean(self):
        members = [single_point_model(0, v, REGRESSION) for v in (1.0, 2.0, 3.0)]
        em = EnsembleModel(kind="bagging", task=REGRESSION, members=members,
                           feature_names=["a"])
        assert em.predict([[9.0]])[0] == pytest.approx(2.0, abs=1e-12)

    def test_prediction_within_member_envelope(self, rng):
        d = make_regression(40, 3, seed=41)
        em = fit_bagging(plain_config(), d, p=5, sample_fraction=0.8, seed=3)
        q = rng.random((15, 3))
        preds = np.stack([m.predict(q) for m in em.members])
        agg = em.predict(q)
        assert np.all(agg >= preds.min(axis=0) - 1e-12)
        assert np.all(agg <= preds.max(axis=0) + 1e-12)

    def test_deterministic_given_seed(self):
        d = make_classification(30, 3, seed=42)
        a = fit_bagging(plain_config(), d, p=3, sample_fraction=0.9, seed=7)
        b = fit_bagging(plain_config(), d, p=3, sample_fraction=0.9, seed=7)
        assert serialize(a) == serialize(b)
        c = fit_bagging(plain_config(), d, p=3, sample_fraction=0.9, seed=8)
        assert serialize(a) != serialize(c)


class TestBoosting:
    def test_single_round_equals_base_regression(self):
        d = make_regression(25, 2, seed=43)
        base = fit(plain_config(), d)
        em = fit_boosting(plain_config(), d, p=1, learning_rate=0.5, seed=0)
        q = d.features[:8]
        assert np.allclose(em.predict(q), base.predict(q), atol=1e-12)

    def test_separable_blobs_do_not_degrade(self):
        d = make_classification(60, 2, seed=44, sep=6.0)
        em = fit_boosting(plain_config(n_neighbors=3), d, p=4, learning_rate=0.5, seed=1)
        member_acc = np.mean(em.members[0].predict(d.features) == d.targets)
        ensemble_acc = np.mean(em.predict(d.features) == d.targets)
        assert ensemble_acc >= member_acc

    def test_member_weights_positive(self):
        d = make_classification(50, 3, seed=45, sep=3.0)
        em = fit_boosting(plain_config(), d, p=3, learning_rate=1.0, seed=2)
        assert len(em.member_weights) == len(em.members) >= 1
        assert (em.member_weights > 0).all()

    def test_deterministic_given_seed(self):
        d = make_classification(40, 3, seed=45)
        a = fit_boosting(plain_config(), d, p=3, learning_rate=1.0, seed=6)
        b = fit_boosting(plain_config(), d, p=3, learning_rate=1.0, seed=6)
        assert serialize(a) == serialize(b)

    def test_exact_memorizer_leaves_zero_residuals(self):
        # k=1 on y = x: member 1 reproduces y on the training set, so every
        # later member fits (and predicts) zeros
        X = np.linspace(0, 1, 20)[:, None]
        d = Dataset(X, X[:, 0].copy(), ["a"], REGRESSION)
        em = fit_boosting(plain_config(n_neighbors=1), d, p=3, learning_rate=1.0, seed=0)
        assert np.allclose(em.members[1].predict(X), 0.0, atol=1e-12)
        assert np.allclose(em.members[2].predict(X), 0.0, atol=1e-12)
        assert np.allclose(em.predict(X), X[:, 0], atol=1e-12)

    def test_proba_rows_sum_to_one(self, rng):
        d = make_classification(40, 3, seed=46)
        em = fit_boosting(plain_config(), d, p=3, learning_rate=1.0, seed=3)
        probs = em.predict_proba(rng.standard_normal((10, 3)))
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)


class TestStacking:
    def test_perfect_base_recovers_identity_combiner(self):
        # every x value appears 5 times with identical targets, so the
        # held-out nearest neighbor always reproduces y exactly
        values = np.repeat(np.arange(10.0), 5)
        d = Dataset(values[:, None], 2.0 * values, ["a"], REGRESSION)
        cfg = plain_config(n_neighbors=1)
        Z = stacking_meta_features([cfg], d, folds=5, seed=0)
        assert np.allclose(Z[:, 0], d.targets, atol=1e-12)  # fixture sanity
        em = fit_stacking([cfg], d, folds=5, seed=0)
        slope, intercept = em.combiner
        assert slope == pytest.approx(1.0, abs=1e-6)
        assert intercept == pytest.approx(0.0, abs=1e-5)
        assert np.allclose(em.predict(d.features), d.targets, atol=1e-6)

    def test_collinear_bases_still_predict(self):
        values = np.repeat(np.arange(10.0), 5)
        d = Dataset(values[:, None], 2.0 * values, ["a"], REGRESSION)
        cfg = plain_config(n_neighbors=1)
        single = fit_stacking([cfg], d, folds=5, seed=0)
        double = fit_stacking([cfg, cfg], d, folds=5, seed=0)
        q = values[::7][:, None]
        assert np.allclose(single.predict(q), double.predict(q), atol=1e-6)

    def test_always_wrong_base_gets_inverted(self):
        # alternating labels on a line: the held-out nearest neighbor always
        # carries the opposite label, so the base is wrong on every row
        X = np.arange(30.0)[:, None]
        y = (np.arange(30) % 2).astype(int)
        d = Dataset(X, y, ["a"], CLASSIFICATION)
        cfg = plain_config(n_neighbors=1)
        Z = stacking_meta_features([cfg], d, folds=5, seed=1)
        base_oof_labels = np.argmax(Z, axis=1)
        base_acc = np.mean(base_oof_labels == y)
        em = fit_stacking([cfg], d, folds=5, seed=1)
        # the combiner's own decisions on the out-of-fold inputs it was
        # trained against: inverting the always-wrong base is learnable
        A = np.hstack([Z, np.ones((len(y), 1))])
        meta_labels = em.class_labels[np.argmax(A @ em.combiner, axis=1)]
        meta_acc = np.mean(meta_labels == y)
        assert base_acc == 0.0
        assert meta_acc >= base_acc
        assert meta_acc == 1.0  # the combiner learned to flip the vote

    def test_leakage_sentinel(self):
        # shuffling one test fold's targets must not change that fold's
        # meta-features: they come from models fit on the other folds
        d = make_regression(30, 3, seed=47)
        cfg = plain_config()
        from spinex.cv import kfold_split

        folds = kfold_split(30, 5, seed=9)
        _, test0 = folds[0]
        Z1 = stacking_meta_features([cfg], d, folds=5, seed=9)
        mutated = np.array(d.targets, copy=True)
        mutated[test0] = mutated[test0][::-1] + 123.0
        d2 = Dataset(d.features, mutated, d.feature_names, REGRESSION)
        Z2 = stacking_meta_features([cfg], d2, folds=5, seed=9)
        assert np.array_equal(Z1[test0], Z2[test0])

    def test_too_few_rows_for_folds(self):
        d = make_regression(4, 2, seed=48)
        with pytest.raises(TooFewRowsForFolds):
            fit_stacking([plain_config()], d, folds=10, seed=0)

    def test_classification_proba_rows_sum_to_one(self, rng):
        d = make_classification(40, 3, seed=49)
        em = fit_stacking([plain_config(), plain_config(n_neighbors=3)], d, folds=4, seed=5)
        probs = em.predict_proba(rng.standard_normal((12, 3)))
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert np.array_equal(em.predict(rng.standard_normal((5, 3))).shape, (5,))

    def test_deterministic_given_seed(self):
        d = make_regression(25, 2, seed=50)
        cfgs = [plain_config(n_neighbors=3)]
        assert serialize(fit_stacking(cfgs, d, 5, seed=11)) == serialize(fit_stacking(cfgs, d, 5, seed=11))
