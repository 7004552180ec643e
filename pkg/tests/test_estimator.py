import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.utils.estimator_checks import parametrize_with_checks

from ccl import CyclicalCurriculumClassifier
from ccl.datasets import gen_blobs
from ccl.exceptions import InvalidParamsError

FAST = dict(hidden=(16,), batch_size=16, lr=1e-2)


@pytest.fixture(scope="module")
def data():
    ds = gen_blobs(300, 3, noise=0.8, seed=1)
    labels = np.array(["cat", "dog", "eel"])[ds.y]
    return np.array(ds.X), labels


class TestClassifier:
    def test_fit_predict(self, data):
        X, y = data
        clf = CyclicalCurriculumClassifier(**FAST).fit(X, y)
        assert set(clf.predict(X)) <= set(y)
        assert clf.score(X, y) > 0.9
        np.testing.assert_array_equal(clf.classes_, ["cat", "dog", "eel"])
        assert clf.n_features_in_ == 2

    def test_proba(self, data):
        X, y = data
        P = CyclicalCurriculumClassifier(**FAST).fit(X, y).predict_proba(X[:10])
        assert P.shape == (10, 3)
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)

    def test_fitted_attributes(self, data):
        X, y = data
        clf = CyclicalCurriculumClassifier(**FAST).fit(X, y)
        n_train = 270
        assert clf.scores_.shape == (n_train,)
        assert abs(clf.scores_.sum() - 1) < 1e-9
        assert len(clf.schedule_) == 3 * clf.scoring_epochs_
        assert clf.schedule_[0] == pytest.approx(0.25, abs=1 / n_train)
        assert clf.history_ and all(0 <= a <= 1 for _, a in clf.history_)

    def test_deterministic(self, data):
        X, y = data
        a = CyclicalCurriculumClassifier(**FAST, random_state=3).fit(X, y)
        b = CyclicalCurriculumClassifier(**FAST, random_state=3).fit(X, y)
        assert a.model_.equals(b.model_)

    @pytest.mark.parametrize("method", ["vanilla", "anti_ccl", "cl", "rand_cl"])
    def test_methods(self, data, method):
        X, y = data
        clf = CyclicalCurriculumClassifier(**FAST, method=method).fit(X, y)
        assert clf.score(X, y) > 0.8

    def test_params_roundtrip(self):
        clf = CyclicalCurriculumClassifier(sp=0.5, alpha=0.7)
        assert clf.get_params()["sp"] == 0.5
        c2 = clone(clf).set_params(method="cl")
        assert c2.get_params()["method"] == "cl" and c2.get_params()["alpha"] == 0.7

    def test_not_fitted(self, data):
        with pytest.raises(NotFittedError):
            CyclicalCurriculumClassifier().predict(data[0])

    def test_feature_count_checked(self, data):
        X, y = data
        clf = CyclicalCurriculumClassifier(**FAST).fit(X, y)
        with pytest.raises(ValueError):
            clf.predict(np.ones((3, 5)))

    def test_input_validation(self, data):
        X, y = data
        with pytest.raises(ValueError):
            CyclicalCurriculumClassifier().fit(X, y[:-1])
        bad = X.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValueError):
            CyclicalCurriculumClassifier().fit(bad, y)
        with pytest.raises(ValueError):
            CyclicalCurriculumClassifier().fit(X, np.zeros(len(y)))

    @pytest.mark.parametrize(
        "kw", [dict(method="spl"), dict(sp=0.9, ep=0.5), dict(validation_fraction=0.0)]
    )
    def test_bad_params(self, data, kw):
        with pytest.raises(InvalidParamsError):
            CyclicalCurriculumClassifier(**kw).fit(*data)

    def test_in_pipeline(self, data):
        X, y = data
        pipe = make_pipeline(StandardScaler(), CyclicalCurriculumClassifier(**FAST))
        scores = cross_val_score(pipe, X, y, cv=3)
        assert scores.mean() > 0.85


@parametrize_with_checks([CyclicalCurriculumClassifier(hidden=(8,), max_epochs=20, lr=1e-2)])
def test_sklearn_api(estimator, check):
    check(estimator)
