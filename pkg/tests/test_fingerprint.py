import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emotrans.fingerprint import (
    N_FEATURES,
    NO_ACT,
    STATE_LABELS,
    FingerprintError,
    FingerprintStore,
    WindowConfig,
    batch_fingerprints,
    cohort_mean_matrix,
    decode,
    drop_noact_column,
    encode,
    fingerprint_timeline,
    flatten,
    transition_matrix,
    window_states,
)

J = (0, 0, 1, 0)


def test_encoding_bijection():
    vecs = list(itertools.product((0, 1), repeat=4))
    assert sorted(encode(v) for v in vecs) == list(range(16))
    for v in vecs:
        assert decode(encode(v)) == v


def test_state_labels():
    assert STATE_LABELS[0] == "N" and STATE_LABELS[16] == "no-act"
    assert STATE_LABELS[encode((1, 1, 0, 0))] == "AF"
    assert STATE_LABELS[9] == "AS"


def test_window_single_post():
    assert window_states([1000], [(0, 0, 2, 0)]).tolist() == [2]


def test_window_gap_gives_noact():
    assert window_states([0, 3600], [J, J]).tolist() == [2, 16, 2]


def test_window_clamp():
    assert window_states([0, 10], [(1, 0, 0, 0), (0, 0, 0, 3)]).tolist() == [9]


def test_window_half_open_boundary():
    assert window_states([0, 1799, 1800], [J, (1, 0, 0, 0), (0, 0, 0, 1)]).tolist() == [10, 1]


def test_window_overlapping():
    cfg = WindowConfig(3600, 1800)
    # windows [0,3600) [1800,5400); second post at 2000 is in both
    assert window_states([0, 2000], [J, (0, 0, 0, 1)], cfg).tolist() == [3, 1]


def test_window_empty_and_unsorted():
    assert window_states([], []).size == 0
    with pytest.raises(FingerprintError):
        window_states([5, 1], [J, J])


def test_window_config_validation():
    with pytest.raises(ValueError):
        WindowConfig(1800, 3600)
    with pytest.raises(ValueError):
        WindowConfig(0, 0)


def test_transition_examples():
    fp = transition_matrix([2, 16, 2])
    assert fp.counts[2, 16] == 1 and fp.counts[16, 2] == 1 and fp.counts.sum() == 2
    assert fp.matrix[2, 16] == 1.0 and fp.matrix[16, 2] == 1.0
    fp = transition_matrix([5, 5, 5, 5])
    assert fp.matrix[5, 5] == 1.0 and fp.matrix.sum() == 1.0
    fp = transition_matrix([7])
    assert not fp.matrix.any() and fp.n_windows == 1


def test_flatten_examples():
    m = np.zeros((17, 17))
    m[0, 1] = 1.0
    v = flatten(m)
    assert v.shape == (N_FEATURES,) and v[1] == 1.0 and v.sum() == 1.0
    assert not flatten(np.zeros((17, 17))).any()
    with pytest.raises(FingerprintError):
        flatten(np.zeros((16, 17)))


def test_cohort_mean():
    a, b = np.zeros((17, 17)), np.zeros((17, 17))
    a[0, 1] = 1
    b[0, 2] = 1
    m = cohort_mean_matrix([a, b])
    assert m[0].tolist()[:3] == [0, 0.5, 0.5]
    assert np.array_equal(cohort_mean_matrix([a]), a)
    assert np.array_equal(cohort_mean_matrix([a, a]), a)
    with pytest.raises(FingerprintError):
        cohort_mean_matrix([])


def test_drop_noact_column():
    m = np.zeros((17, 17))
    m[3, 16] = 1.0
    assert not drop_noact_column(m)[3].any()
    eye = np.eye(17)
    assert np.array_equal(drop_noact_column(eye)[:16], eye[:16, :16])
    rng = np.random.default_rng(1)
    r = rng.random((17, 17))
    r /= r.sum(axis=1, keepdims=True)
    d = drop_noact_column(r)
    assert d.shape == (17, 16)
    assert np.allclose(d.sum(axis=1), 1 - r[:, 16])


timelines = st.lists(st.tuples(st.integers(0, 20_000), st.tuples(*[st.integers(0, 2)] * 4)),
                     min_size=1, max_size=40)


def _sorted(tl):
    tl = sorted(tl, key=lambda p: p[0])
    return [t for t, _ in tl], [v for _, v in tl]


@settings(max_examples=200)
@given(timelines)
def test_rows_stochastic_and_count_total(tl):
    times, vecs = _sorted(tl)
    fp = fingerprint_timeline(times, vecs)
    sums = fp.matrix.sum(axis=1)
    assert np.all((np.abs(sums - 1) <= 1e-9) | (sums == 0))
    assert np.all(fp.matrix[sums == 0] == 0)
    assert fp.counts.sum() == fp.n_windows - 1
    assert fp.n_windows == (times[-1] - times[0]) // 1800 + 1


@settings(max_examples=100)
@given(timelines, st.integers(1, 4))
def test_wider_windows_never_lose_active_windows(tl, factor):
    times, vecs = _sorted(tl)
    narrow = window_states(times, vecs, WindowConfig(600, 600))
    wide = window_states(times, vecs, WindowConfig(600 * (factor + 1), 600))
    assert np.sum(wide != NO_ACT) >= np.sum(narrow != NO_ACT)


@settings(max_examples=50)
@given(st.lists(timelines, min_size=1, max_size=6))
def test_batch_matches_single(tls):
    pairs = [_sorted(tl) for tl in tls]
    batch = batch_fingerprints(pairs)
    for (t, v), fp in zip(pairs, batch):
        single = fingerprint_timeline(t, v)
        assert np.array_equal(single.counts, fp.counts)
        assert single.n_windows == fp.n_windows


def test_batch_with_empty_timeline():
    fps = batch_fingerprints([([], []), ([0, 1800], [J, J])])
    assert fps[0].n_windows == 0 and not fps[0].counts.any()
    assert fps[1].counts[2, 2] == 1


def _simulate(P, n, rng, start=0):
    # direct chain simulation, independent of the synth module
    cum = np.cumsum(P, axis=1)
    u = rng.random(n)
    s = np.empty(n, dtype=np.int64)
    s[0] = start
    for i in range(1, n):
        s[i] = min(int(np.searchsorted(cum[s[i - 1]], u[i], side="right")), P.shape[0] - 1)
    return s


def test_estimator_consistency_three_state_support():
    P = np.eye(17)
    P[[0, 2, 9]] = 0
    P[0, [0, 2, 9]] = [0.5, 0.3, 0.2]
    P[2, [0, 2, 9]] = [0.1, 0.6, 0.3]
    P[9, [0, 2, 9]] = [0.4, 0.4, 0.2]
    est = transition_matrix(_simulate(P, 100_000, np.random.default_rng(0))).matrix
    assert np.abs(est[[0, 2, 9]] - P[[0, 2, 9]]).max() < 0.01


def test_estimator_consistency_full_matrix():
    # every entry within 4.5 binomial standard errors of the truth
    rng = np.random.default_rng(0)
    P = rng.random((17, 17)) ** 3
    P /= P.sum(axis=1, keepdims=True)
    fp = transition_matrix(_simulate(P, 100_000, rng))
    visits = fp.counts.sum(axis=1, keepdims=True)
    se = np.sqrt(P * (1 - P) / visits)
    assert np.all(np.abs(fp.matrix - P) <= 4.5 * se + 1e-12)


def test_store_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    feats = rng.random((3, N_FEATURES)) / 7
    feats[1] = 0.1 + 0.2  # not exactly representable as a short decimal
    store = FingerprintStore(["a", "b", "c"], ["Control", "BD", "BD"], [2011, 2012, 2019], feats,
                             WindowConfig(3600, 1800), [5, 6, 7])
    store.save(tmp_path)
    back = FingerprintStore.load(tmp_path / "fingerprints.csv")
    assert back.user_ids == store.user_ids and back.labels == store.labels and back.years == store.years
    assert np.array_equal(back.features, feats)
    assert back.config == WindowConfig(3600, 1800) and back.n_windows == [5, 6, 7]
    header = (tmp_path / "fingerprints.csv").read_text().splitlines()[0].split(",")
    assert header[:4] == ["user_id", "label", "year_bucket", "f0"] and header[-1] == "f288"
    sub, y = store.task("BD")
    assert y.tolist() == [0, 1, 1]


def test_store_rejects_bad_csv(tmp_path):
    p = tmp_path / "fingerprints.csv"
    p.write_text("user_id,label\n")
    with pytest.raises(FingerprintError):
        FingerprintStore.load(p)
