import json

import numpy as np
import pytest

from emotrans.emotion import EMOTIONS, LexiconLabeler, load_lexicon, post_emotion
from emotrans.fingerprint import NO_ACT, transition_matrix, window_states
from emotrans.synth import (
    GeneratorSpec,
    SynthError,
    average_row_tv,
    build_synthetic_cohort,
    default_class_matrices,
    emit_posts,
    make_drift_tokens,
    sample_chain,
    sample_user_states,
    stationary_distribution,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def test_cycle_matrix_is_deterministic():
    P = np.roll(np.eye(17), 1, axis=1)
    s = sample_chain(P, 40, rng(), initial=np.eye(17)[3])
    assert s.tolist() == [(3 + i) % 17 for i in range(40)]


def test_identity_gives_constant_sequence():
    s = sample_chain(np.eye(17), 50, rng(1))
    assert len(set(s.tolist())) == 1


def test_three_state_support_converges():
    P = np.zeros((17, 17))
    P[np.ix_([1, 4, 7], [1, 4, 7])] = [[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.3, 0.3, 0.4]]
    s = sample_chain(P, 100_000, rng(2), initial=np.eye(17)[1])
    est = transition_matrix(s).matrix
    assert np.abs(est[[1, 4, 7]] - P[[1, 4, 7]]).max() < 0.01


def test_reachable_zero_row_is_fatal():
    P = np.zeros((3, 3))
    P[0, 1] = 1.0
    P[1, 0] = 0.5
    P[1, 2] = 0.5
    with pytest.raises(SynthError, match="no outgoing"):
        sample_chain(P, 10, rng(), initial=[1, 0, 0])


def test_stationary_distribution():
    P = np.array([[0.9, 0.1], [0.5, 0.5]])
    assert np.allclose(stationary_distribution(P), [5 / 6, 1 / 6])
    assert stationary_distribution(np.eye(3)) is None


def test_user_states_start_and_end_active():
    P = default_class_matrices()["MDD"]
    for seed in range(20):
        s = sample_user_states(P, 200, rng(seed))
        assert s[0] != NO_ACT and s[-1] != NO_ACT


def test_emit_posts_examples():
    spec = GeneratorSpec(users_per_class=1, windows_per_user=3)
    posts = emit_posts([2, 16, 2], spec, "u", 1000, rng())
    assert [p.created_utc for p in posts] == [1000, 4600]
    joy = set(spec.emotion_token_map["joy"])
    assert all(joy & set(p.body.lower().rstrip(".").split()) for p in posts)
    assert all("?" not in p.body for p in posts)
    (p9,) = emit_posts([9], spec, "u", 1000, rng())
    words = set(p9.body.lower().rstrip(".").split())
    assert len(words & set(spec.emotion_token_map["anger"])) == 1
    assert len(words & set(spec.emotion_token_map["sadness"])) == 1
    assert not words & (set(spec.emotion_token_map["joy"]) | set(spec.emotion_token_map["fear"]))


def test_round_trip_exact():
    spec = GeneratorSpec(users_per_class=5, windows_per_user=120, seed=4)
    cohort = build_synthetic_cohort(spec)
    lab = LexiconLabeler()
    for u in cohort.dataset.users:
        vecs = [post_emotion(p.body, lab) for p in u.posts]
        states = window_states([p.created_utc for p in u.posts], vecs)
        assert np.array_equal(states, cohort.states[u.user_id])


def test_cohort_balanced_and_years_cover_range():
    spec = GeneratorSpec(users_per_class=9, windows_per_user=20, start_year=2011, end_year=2019)
    cohort = build_synthetic_cohort(spec)
    assert cohort.dataset.class_sizes() == {"AD": 9, "BD": 9, "Control": 9, "MDD": 9}
    assert {u.year_bucket for u in cohort.dataset.users} == set(range(2011, 2020))


def test_raw_posts_rebuild_same_cohort(tmp_path):
    from emotrans.corpus import CohortSpec, build_cohort, group_timelines
    cohort = build_synthetic_cohort(GeneratorSpec(users_per_class=6, windows_per_user=30, seed=2))
    rebuilt = build_cohort(group_timelines(cohort.raw_posts), CohortSpec())
    assert rebuilt.manifest() == cohort.dataset.manifest()


def test_same_seed_byte_identical(tmp_path):
    spec = {"users_per_class": 3, "windows_per_user": 40, "seed": 8, "drift": {"slots": 2}}
    build_synthetic_cohort(GeneratorSpec.from_dict(spec)).save(tmp_path / "a")
    build_synthetic_cohort(GeneratorSpec.from_dict(spec)).save(tmp_path / "b")
    for name in ("raw_posts.jsonl", "posts.jsonl", "manifest.jsonl", "truth.jsonl", "generator_spec.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_spec_echo_round_trips(tmp_path):
    spec = GeneratorSpec.from_dict({"users_per_class": 2, "windows_per_user": 10, "drift": {"slots": 3}})
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(spec.to_dict()))
    again = GeneratorSpec.load(p)
    assert again.to_dict() == spec.to_dict()


def test_drift_tokens_table():
    table = make_drift_tokens(["Control", "BD"], 2011, 2019, slots=4, tokens_per_slot=5)
    assert len(table[("BD", 2011)]) == 20
    assert set(table[("BD", 2011)]) & set(table[("BD", 2012)])
    assert not set(table[("BD", 2011)]) & set(table[("BD", 2015)])
    assert not set(table[("BD", 2011)]) & set(table[("Control", 2011)])
    lex = load_lexicon()
    assert not any(t in lex[e] for ts in table.values() for t in ts for e in EMOTIONS)


def test_drift_changes_text_not_states():
    base = {"users_per_class": 4, "windows_per_user": 50, "seed": 1}
    plain = build_synthetic_cohort(GeneratorSpec.from_dict(base))
    drift = build_synthetic_cohort(GeneratorSpec.from_dict({**base, "drift": {"slots": 2}}))
    assert all(np.array_equal(plain.states[u], drift.states[u]) for u in plain.states)
    u = drift.dataset.users[0]
    vocab = set(drift.spec.drift_tokens[(u.label, u.year_bucket)])
    assert any(vocab & set(p.body.lower().rstrip(".").split()) for p in u.posts)
    filler = {w.lower() for w in drift.spec.filler_tokens}
    assert not any(filler & set(p.body.lower().rstrip(".").split()) for p in u.posts)


def test_default_matrices_design():
    mats = default_class_matrices()
    assert set(mats) == {"Control", "BD", "MDD", "AD"}
    joy_cols = [s for s in range(16) if s & 2]
    for name, m in mats.items():
        assert np.all(np.abs(m.sum(axis=1) - 1) <= 1e-12)
        if name != "Control":
            assert average_row_tv(mats["Control"], m) >= 0.3
            assert m[:, 0].sum() < mats["Control"][:, 0].sum()
            assert m[:, joy_cols].sum() < mats["Control"][:, joy_cols].sum()


def test_spec_validation():
    with pytest.raises(SynthError):
        GeneratorSpec(windows_per_user=1)
    bad = default_class_matrices()
    bad["BD"] = bad["BD"] * 1.01
    with pytest.raises(SynthError):
        GeneratorSpec(class_matrices=bad)
    with pytest.raises(SynthError, match="missing"):
        GeneratorSpec(emotion_token_map={"anger": ["angry"], "fear": ["scared"], "joy": ["happy"]})
    with pytest.raises(SynthError):
        GeneratorSpec.from_dict({"users": 3})
    spec = GeneratorSpec(filler_tokens=["happy"])
    with pytest.raises(SynthError, match="emotion word"):
        build_synthetic_cohort(spec)
