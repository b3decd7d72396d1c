import json

import pytest

from emotrans.corpus import (
    CohortDataset,
    CohortSpec,
    CorpusError,
    Post,
    UserTimeline,
    build_cohort,
    detect_self_report,
    group_timelines,
    ingest_posts,
    year_bucket,
)

from .conftest import ts, write_lines


def test_ingest_single_line(tmp_path):
    p = write_lines(tmp_path / "p.jsonl", [
        {"user_id": "u1", "created_utc": 1420070400, "subreddit": "news", "body": "hello."}])
    posts = list(ingest_posts(p))
    assert posts == [Post("u1", 1420070400, "news", "hello.")]


def test_ingest_empty_file_warns(tmp_path, caplog):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert list(ingest_posts(p)) == []
    assert "no posts" in caplog.text


def test_ingest_counts_malformed(tmp_path):
    rows = [{"user_id": f"u{i}", "created_utc": 1420070400 + i, "subreddit": "x", "body": "b"}
            for i in range(3)]
    p = write_lines(tmp_path / "p.jsonl", rows + ["{not json"])
    reader = ingest_posts(p)
    assert len(list(reader)) == 3
    assert reader.n_malformed == 1


def test_ingest_mostly_malformed_is_fatal(tmp_path):
    p = write_lines(tmp_path / "p.jsonl", [
        {"user_id": "u", "created_utc": 5, "body": "b"}, "[]", "{bad", {"user_id": "", "body": "x"}])
    with pytest.raises(CorpusError, match="3/4"):
        list(ingest_posts(p))


def test_ingest_unreadable_file(tmp_path):
    with pytest.raises(CorpusError):
        list(ingest_posts(tmp_path / "missing.jsonl"))


def test_field_mapping(tmp_path):
    p = write_lines(tmp_path / "p.jsonl", [{"author": "a", "ts": "1420070400", "text": "x."}])
    fields = {"user_id": "author", "created_utc": "ts", "body": "text"}
    (post,) = list(ingest_posts(p, fields))
    assert (post.user_id, post.created_utc, post.subreddit) == ("a", 1420070400, "")


def _tl(uid, *bodies_at):
    return UserTimeline(uid, [Post(uid, t, sub, body) for t, body, sub in bodies_at])


def test_self_report_just_diagnosed():
    tl = _tl("u", (100, "hi.", "news"), (200, "I was just diagnosed with anxiety yesterday", "news"))
    rep = detect_self_report(tl, CohortSpec())
    assert (rep.disorder, rep.report_utc) == ("AD", 200)


def test_self_report_case_and_whitespace():
    tl = _tl("u", (100, "so   I'M DIAGNOSED\nwith Bipolar", "x"))
    assert detect_self_report(tl, CohortSpec()).disorder == "BD"


def test_self_report_third_person_limitation():
    # "my friend was diagnosed ..." lacks the "i" of every template, but a
    # third-person sentence that contains a template still matches
    spec = CohortSpec()
    assert detect_self_report(_tl("u", (1, "my friend was diagnosed with depression", "x")), spec) is None
    rep = detect_self_report(_tl("u", (1, "my friend Ali was diagnosed with depression", "x")), spec)
    assert rep is not None and rep.disorder == "MDD"


def test_self_report_absent():
    assert detect_self_report(_tl("u", (1, "nothing to see", "x")), CohortSpec()) is None


def test_self_report_earliest_and_all_disorders():
    tl = _tl("u", (300, "I was diagnosed with anxiety", "x"), (100, "I am diagnosed with bipolar", "x"))
    rep = detect_self_report(tl, CohortSpec())
    assert rep.disorder == "BD" and rep.report_utc == 100
    assert rep.disorders == {"BD", "AD"}


def _cohort_timelines():
    y = ts(2015, 6)
    tls = []
    for d, word in (("BD", "bipolar"), ("MDD", "depression"), ("AD", "anxiety")):
        for i in range(3):
            uid = f"{d}{i}"
            tls.append(_tl(uid, (y, "a post.", "news"), (y + 10, f"I was diagnosed with {word}", "news"),
                           (y + 20, "after report.", "news")))
    for i in range(4):
        tls.append(_tl(f"C{i}", (y, "plain.", "AskReddit")))
    return tls


def test_build_cohort_rules():
    y = ts(2015, 6)
    tls = _cohort_timelines() + [
        _tl("multi", (y, "x", "news"), (y + 1, "I was diagnosed with bipolar", "news"),
            (y + 2, "I was diagnosed with anxiety", "news")),
        _tl("early", (y, "I was diagnosed with bipolar", "news")),
        _tl("ctrl_excl", (y, "x", "AskReddit"), (y + 1, "y", "bipolar")),
        _tl("ctrl_offtop", (y, "x", "gardening")),
        _tl("old", (ts(2009), "x", "AskReddit")),
    ]
    ds = build_cohort(tls, CohortSpec(seed=3))
    assert ds.class_sizes() == {"AD": 3, "BD": 3, "Control": 3, "MDD": 3}
    assert ds.drops["rules"] == {"multi_disorder": 1, "no_posts_before_report": 1,
                                 "control_in_exclusion_subreddit": 1,
                                 "control_not_in_top_subreddits": 1, "empty_after_time_range": 1}
    assert ds.drops["downsampled"]["Control"] == 1
    for u in ds.users:
        if u.label != "Control":
            assert all(p.created_utc < u.report_utc for p in u.posts)
            assert len(u.posts) == 1


def test_build_cohort_downsamples_to_min():
    y = ts(2014)
    tls = []
    for label, n in (("Control", 10), ("BD", 8), ("MDD", 9), ("AD", 12)):
        word = {"BD": "bipolar", "MDD": "depression", "AD": "anxiety"}.get(label)
        for i in range(n):
            if word:
                tls.append(_tl(f"{label}{i}", (y, "x", "news"), (y + 5, f"I have been diagnosed with {word}", "news")))
            else:
                tls.append(_tl(f"{label}{i}", (y, "x", "news")))
    ds = build_cohort(tls, CohortSpec())
    assert set(ds.class_sizes().values()) == {8}


def test_build_cohort_empty_class_is_fatal():
    tls = [_tl("C", (ts(2015), "x", "news"))]
    with pytest.raises(CorpusError) as err:
        build_cohort(tls, CohortSpec())
    assert err.value.report["class_sizes_before_balancing"]["BD"] == 0


def test_build_cohort_deterministic(tmp_path):
    tls = _cohort_timelines()
    a = build_cohort(tls, CohortSpec(seed=9))
    b = build_cohort(list(reversed(tls)), CohortSpec(seed=9))
    a.save(tmp_path / "a")
    b.save(tmp_path / "b")
    for name in ("manifest.jsonl", "posts.jsonl", "drops.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_dataset_round_trip(tmp_path):
    ds = build_cohort(_cohort_timelines(), CohortSpec())
    ds.save(tmp_path)
    back = CohortDataset.load(tmp_path)
    assert back.manifest() == ds.manifest()
    row = json.loads((tmp_path / "manifest.jsonl").read_text().splitlines()[0])
    assert set(row) == {"user_id", "label", "report_utc", "n_posts", "year_bucket"}


def test_year_bucket():
    assert year_bucket([Post("u", ts(2015, 6, 1), "", "")]) == 2015
    assert year_bucket([Post("u", ts(2011), "", "")]) == 2011
    posts = [Post("u", ts(y, 3), "", "") for y in range(2013, 2018)]
    assert year_bucket(UserTimeline("u", posts)) == 2017


def test_group_timelines_sorts():
    posts = [Post("b", 5, "", ""), Post("a", 9, "", ""), Post("a", 2, "", "")]
    tls = group_timelines(posts)
    assert [t.user_id for t in tls] == ["a", "b"]
    assert [p.created_utc for p in tls[0].posts] == [2, 9]


def test_post_validation():
    with pytest.raises(ValueError):
        Post("", 1, "", "")
    with pytest.raises(ValueError):
        Post("u", 0, "", "")


def test_cohort_spec_rejects_unknown_keys():
    with pytest.raises(ValueError):
        CohortSpec.from_dict({"time_rnage": [2011, 2019]})
