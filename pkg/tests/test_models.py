import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emotrans import kernels
from emotrans.evaluation import cross_validate
from emotrans.models import (
    ModelError,
    TfidfConfig,
    TfidfVectorizer,
    TrainedModel,
    VocabularyError,
    predict_proba,
    tfidf_features,
    train,
    train_logistic,
    train_margin,
    train_tree_ensemble,
)
from emotrans.models.linear import LogisticRegression, logistic_gradient, logistic_loss
from emotrans.models.tfidf import default_disorder_terms, default_drug_terms

DATA = Path(__file__).parent / "data"


def clouds(n=40, d=289, seed=0, gap=3.0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.normal(size=(n, d)) + gap * y[:, None]
    return X, y


def test_rf_separable_training_accuracy():
    X, y = clouds()
    m = train_tree_ensemble(X, y, {"n_trees": 25}, seed=1)
    assert np.mean((m.predict_proba(X) >= 0.5) == y) == 1.0


def test_rf_random_labels_cv_near_chance():
    rng = np.random.default_rng(5)
    X = rng.random((200, 20))
    y = rng.permutation(np.repeat([0, 1], 100))
    cv = cross_validate(X, y, lambda a, b, s: train("rf", a, b, s, {"n_trees": 30}), 5, seed=2)
    assert abs(cv.mean["accuracy"] - 0.5) <= 0.1


def test_rf_proba_is_vote_fraction():
    X, y = clouds(30, 5, seed=2, gap=0.5)
    m = train("rf", X, y, 3, {"n_trees": 7})
    p = m.predict_proba(np.random.default_rng(0).normal(size=(50, 5)))
    assert np.all(np.isin(np.round(p * 7, 9), np.arange(8)))


def test_rf_all_trees_positive():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    m = train("rf", X, y, 0, {"n_trees": 5, "bootstrap": False, "max_features": 1})
    assert m.predict_proba(np.array([[10.0]]))[0] == 1.0


def test_rf_deterministic_and_order_invariant():
    X, y = clouds(40, 12, seed=3, gap=0.7)
    a = train("rf", X, y, 11, {"n_trees": 15})
    b = train("rf", X, y, 11, {"n_trees": 15}, jobs=3)
    perm = np.random.default_rng(1).permutation(len(y))
    c = train("rf", X[perm], y[perm], 11, {"n_trees": 15})
    assert a.to_json() == b.to_json() == c.to_json()


def test_rf_backends_identical():
    X, y = clouds(40, 30, seed=4, gap=0.4)
    with kernels.use_backend("python"):
        a = train("rf", X, y, 2, {"n_trees": 10})
    b = train("rf", X, y, 2, {"n_trees": 10})
    assert a.to_json() == b.to_json()


def test_single_class_is_fatal():
    with pytest.raises(ModelError):
        train("rf", np.zeros((4, 2)), np.zeros(4))


def test_nonfinite_features_rejected():
    X = np.zeros((4, 2))
    X[0, 0] = np.nan
    with pytest.raises(ModelError):
        train("logistic", X, np.array([0, 1, 0, 1]))


def test_unknown_kind():
    with pytest.raises(ModelError):
        train("xgboost", *clouds(4, 2))


def test_logistic_identity_feature():
    y = np.array([0, 1] * 10)
    m = train_logistic(y[:, None].astype(float), y, seed=0)
    assert m.estimator.coef[0] > 0
    assert np.mean((m.predict_proba(y[:, None].astype(float)) >= 0.5) == y) == 1.0


def test_logistic_zero_features_half():
    y = np.array([0, 1] * 10)
    m = train_logistic(np.zeros((20, 3)), y)
    assert np.allclose(m.predict_proba(np.zeros((2, 3))), 0.5, atol=1e-6)


def test_logistic_zero_weights_predict_half():
    est = LogisticRegression()
    est.set_params({"coef": [0.0, 0.0], "intercept": 0.0}, 2)
    m = TrainedModel("logistic", "ER", 0, est.hyperparams, 2, est)
    assert predict_proba(m, np.ones((3, 2))).tolist() == [0.5, 0.5, 0.5]


def test_logistic_loss_trace_non_increasing():
    X, y = clouds(60, 10, seed=6, gap=0.3)
    m = train_logistic(X, y, 1e-2)
    trace = np.array(m.estimator.trace)
    assert np.all(np.diff(trace) <= 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_logistic_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(15, 4))
    y = rng.integers(0, 2, 15)
    w, b, l2 = rng.normal(size=4), float(rng.normal()), 0.1
    gw, gb = logistic_gradient(w, b, X, y, l2)
    h = 1e-6
    num = []
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        num.append((logistic_loss(w + e, b, X, y, l2) - logistic_loss(w - e, b, X, y, l2)) / (2 * h))
    num_b = (logistic_loss(w, b + h, X, y, l2) - logistic_loss(w, b - h, X, y, l2)) / (2 * h)
    analytic = np.append(gw, gb)
    numeric = np.append(num, num_b)
    rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-8)
    assert np.all((rel < 1e-4) | (np.abs(analytic - numeric) < 1e-9))


def test_margin_classifier_separates():
    X, y = clouds(40, 6, seed=7)
    m = train_margin(X, y)
    p = m.predict_proba(X)
    assert np.all((p >= 0) & (p <= 1))
    assert np.mean((p >= 0.5) == y) == 1.0


def test_predict_dimension_mismatch():
    m = train_logistic(*clouds(10, 3))
    with pytest.raises(ModelError):
        m.predict_proba(np.zeros((2, 4)))


@pytest.mark.parametrize("kind", ["rf", "logreg", "svm"])
def test_serialization_round_trip(kind, tmp_path):
    X, y = clouds(20, 5, seed=8, gap=1.0)
    hp = {"n_trees": 5} if kind == "rf" else {}
    m = train(kind, X, y, 4, hp)
    m.save(tmp_path / "m.json")
    back = TrainedModel.load(tmp_path / "m.json")
    assert back.to_json() == m.to_json()
    assert np.array_equal(back.predict_proba(X), m.predict_proba(X))


def test_golden_model_outputs():
    # model and expected outputs were serialized once from a fixed fixture
    golden = json.loads((DATA / "golden_outputs.json").read_text())
    model = TrainedModel.load(DATA / "golden_rf.json")
    X = np.array(golden["inputs"])
    assert model.predict_proba(X).tolist() == golden["proba"]
    Xtr, ytr = clouds(30, 8, seed=9, gap=0.8)
    assert train("rf", Xtr, ytr, 13, {"n_trees": 9}).to_dict() == model.to_dict()


# --------------------------------------------------------------------------
# tf-idf


def test_tfidf_hand_fixture():
    docs = ["cat dog", "dog dog fish", "cat bird"]
    X, _, vec = tfidf_features(docs, config=TfidfConfig([], []))
    assert vec.vocabulary == ["bird", "cat", "dog", "fish"]
    expected = np.array([
        [0.0, 0.707106781186547524, 0.707106781186547524, 0.0],
        [0.0, 0.0, 0.835591541944917688, 0.549351231026303302],
        [0.795960541568165250, 0.605348508106291676, 0.0, 0.0],
    ])
    assert np.abs(X - expected).max() < 1e-9


def test_tfidf_matches_sklearn():
    from sklearn.feature_extraction.text import TfidfVectorizer as SkTfidf
    rng = np.random.default_rng(0)
    words = [f"w{i}" for i in range(30)]
    train_docs = [" ".join(rng.choice(words, rng.integers(3, 20))) for _ in range(25)]
    test_docs = [" ".join(rng.choice(words + ["unseen"], 10)) for _ in range(5)]
    ours = TfidfVectorizer(TfidfConfig([], [])).fit(train_docs)
    sk = SkTfidf(token_pattern=r"(?u)\b[^\W_]{2,}\b").fit(train_docs)
    assert ours.vocabulary == list(sk.get_feature_names_out())
    assert np.abs(ours.transform(test_docs) - sk.transform(test_docs).toarray()).max() < 1e-12


def test_tfidf_orthogonal_docs():
    X = TfidfVectorizer(TfidfConfig([], [])).fit_transform(["alpha beta", "gamma delta"])
    assert X[0] @ X[1] == 0
    assert np.allclose(np.linalg.norm(X, axis=1), 1)


def test_tfidf_excludes_terms():
    cfg = TfidfConfig()
    excluded = sorted(cfg.excluded)
    docs = [" ".join(excluded) + " weather", "I am bipolar and take Lithium daily", "plain words here"]
    vec = TfidfVectorizer(cfg).fit(docs)
    assert not set(vec.vocabulary) & cfg.excluded
    assert "bipolar" in default_disorder_terms() and "lithium" in default_drug_terms()
    norms = np.linalg.norm(vec.transform(docs + ["bipolar"]), axis=1)
    assert np.all((np.abs(norms - 1) < 1e-12) | (norms == 0))


def test_tfidf_empty_vocabulary():
    with pytest.raises(VocabularyError):
        TfidfVectorizer(TfidfConfig(["bipolar"], [])).fit(["bipolar", "a b"])
