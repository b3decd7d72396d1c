"""Post ingestion and distant-supervision cohort construction.

A raw corpus is JSONL, one post per line. Users who self-report a diagnosis
("I was diagnosed with bipolar", ...) form the disorder classes; control users
come from popular subreddits and must never self-report or post in
disorder-related subreddits. Disorder timelines are cut at the first report.

Dataset directory layout (also produced by ``synth generate``)::

    posts.jsonl      retained posts, sorted by (user_id, created_utc)
    manifest.jsonl   user_id, label, report_utc, n_posts, year_bucket
    drops.json       per-rule drop counts
"""
from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from .seeding import rng_for

log = logging.getLogger(__name__)

LABELS = ("Control", "BD", "MDD", "AD")
DISORDERS = ("BD", "MDD", "AD")

REPORT_PREFIXES = (
    "I am diagnosed with",
    "I have been diagnosed with",
    "I was diagnosed with",
    "I'm diagnosed with",
    "I was just diagnosed with",
)
DISORDER_WORDS = {"BD": "bipolar", "MDD": "depression", "AD": "anxiety"}

CONTROL_TOP_SUBREDDITS = (
    "TranscribersOfReddit", "TalkativePeople", "AskReddit", "longtail", "Nudelete",
    "politics", "teenagers", "PUBGvideos", "news", "AMAAggregator", "relationships",
    "funny", "unpopularopinion", "worldnews", "todayilearned", "SquaredCircle",
    "bipolar", "AmItheAsshole", "pics", "nfl",
)
EXCLUSION_SUBREDDITS = (
    "mentalhealth", "bipolar", "bipolar2", "BipolarReddit", "BipolarSOs",
    "bipolarart", "depression", "Anxiety", "Anxietyhelp", "socialanxiety",
)

DEFAULT_FIELDS = {
    "user_id": "user_id",
    "created_utc": "created_utc",
    "subreddit": "subreddit",
    "body": "body",
}


class CorpusError(Exception):
    """Fatal ingestion or cohort-construction failure."""

    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = report or {}


@dataclass(frozen=True)
class Post:
    user_id: str
    created_utc: int
    subreddit: str
    body: str

    def __post_init__(self):
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        if self.created_utc <= 0:
            raise ValueError(f"created_utc must be positive, got {self.created_utc}")

    def to_json(self) -> dict:
        return {
            "user_id": self.user_id,
            "created_utc": self.created_utc,
            "subreddit": self.subreddit,
            "body": self.body,
        }


@dataclass
class UserTimeline:
    user_id: str
    posts: list[Post]
    label: str | None = None
    report_utc: int | None = None

    def __post_init__(self):
        self.posts = sorted(self.posts, key=lambda p: p.created_utc)


@dataclass(frozen=True)
class SelfReport:
    disorder: str
    report_utc: int
    disorders: frozenset


def default_patterns() -> dict[str, list[str]]:
    return {d: [f"{p} {w}" for p in REPORT_PREFIXES] for d, w in DISORDER_WORDS.items()}


@dataclass
class CohortSpec:
    disorder_patterns: dict[str, list[str]] = field(default_factory=default_patterns)
    control_top_subreddits: list[str] = field(default_factory=lambda: list(CONTROL_TOP_SUBREDDITS))
    exclusion_subreddits: list[str] = field(default_factory=lambda: list(EXCLUSION_SUBREDDITS))
    time_range: tuple[int, int] = (2011, 2019)
    seed: int = 0
    fields: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_FIELDS))

    def __post_init__(self):
        self.time_range = tuple(int(y) for y in self.time_range)
        if len(self.time_range) != 2 or self.time_range[0] > self.time_range[1]:
            raise ValueError(f"bad time_range {self.time_range}")
        for disorder in DISORDERS:
            if not self.disorder_patterns.get(disorder):
                raise ValueError(f"no self-report patterns for {disorder}")
        unknown = set(self.disorder_patterns) - set(DISORDERS)
        if unknown:
            raise ValueError(f"patterns for unknown disorders: {sorted(unknown)}")
        missing = set(DEFAULT_FIELDS) - set(self.fields)
        if missing:
            self.fields = {**DEFAULT_FIELDS, **self.fields}
        self._compiled = {d: [normalize_text(p) for p in pats]
                          for d, pats in self.disorder_patterns.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "CohortSpec":
        known = {"disorder_patterns", "control_top_subreddits", "exclusion_subreddits",
                 "time_range", "seed", "fields"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown cohort spec keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "CohortSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "disorder_patterns": self.disorder_patterns,
            "control_top_subreddits": list(self.control_top_subreddits),
            "exclusion_subreddits": list(self.exclusion_subreddits),
            "time_range": list(self.time_range),
            "seed": self.seed,
            "fields": self.fields,
        }


_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Lowercase, straighten apostrophes, collapse whitespace."""
    text = text.replace("’", "'").replace("‘", "'")
    return _WS.sub(" ", text).strip().lower()


def utc_year(ts: int) -> int:
    return datetime.fromtimestamp(ts, tz=timezone.utc).year


# --------------------------------------------------------------------------
# ingestion


class PostReader:
    """Iterate posts from a JSONL file, skipping malformed lines.

    Iteration raises ``CorpusError`` at the end when more than half of the
    non-blank lines were malformed. ``n_malformed`` and ``problems`` hold the
    per-line diagnostics.
    """

    max_problems = 20

    def __init__(self, path, fields: dict[str, str] | None = None):
        self.path = Path(path)
        self.fields = {**DEFAULT_FIELDS, **(fields or {})}
        self.n_lines = 0
        self.n_malformed = 0
        self.problems: list[str] = []

    def _parse(self, line: str) -> Post:
        rec = json.loads(line)
        if not isinstance(rec, dict):
            raise ValueError("line is not a JSON object")
        f = self.fields
        uid = rec.get(f["user_id"])
        ts = rec.get(f["created_utc"])
        body = rec.get(f["body"])
        sub = rec.get(f["subreddit"], "")
        if not isinstance(uid, str) or not uid:
            raise ValueError(f"missing or empty {f['user_id']!r}")
        if isinstance(ts, str) and ts.strip().isdigit():
            ts = int(ts)
        elif isinstance(ts, float) and ts.is_integer():
            ts = int(ts)
        if isinstance(ts, bool) or not isinstance(ts, int) or ts <= 0:
            raise ValueError(f"bad {f['created_utc']!r}: {ts!r}")
        if not isinstance(body, str):
            raise ValueError(f"missing {f['body']!r}")
        if sub is None:
            sub = ""
        if not isinstance(sub, str):
            raise ValueError(f"bad {f['subreddit']!r}: {sub!r}")
        return Post(uid, ts, sub, body)

    def __iter__(self) -> Iterator[Post]:
        try:
            fh = self.path.open("r", encoding="utf-8")
        except OSError as exc:
            raise CorpusError(f"cannot read {self.path}: {exc}") from exc
        with fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                self.n_lines += 1
                try:
                    post = self._parse(line)
                except (ValueError, TypeError) as exc:
                    self.n_malformed += 1
                    if len(self.problems) < self.max_problems:
                        self.problems.append(f"line {lineno}: {exc}")
                    continue
                yield post
        if self.n_lines == 0:
            log.warning("%s contains no posts", self.path)
        elif self.n_malformed:
            log.warning("%s: skipped %d malformed of %d lines",
                        self.path, self.n_malformed, self.n_lines)
        if self.n_lines and self.n_malformed * 2 > self.n_lines:
            raise CorpusError(
                f"{self.path}: {self.n_malformed}/{self.n_lines} lines malformed\n"
                + "\n".join(self.problems),
                {"n_lines": self.n_lines, "n_malformed": self.n_malformed},
            )


def ingest_posts(path, fields: dict[str, str] | None = None) -> PostReader:
    """Stream posts from ``path``; see :class:`PostReader`."""
    return PostReader(path, fields)


def group_timelines(posts: Iterable[Post]) -> list[UserTimeline]:
    by_user: dict[str, list[Post]] = {}
    for post in posts:
        by_user.setdefault(post.user_id, []).append(post)
    return [UserTimeline(uid, by_user[uid]) for uid in sorted(by_user)]


# --------------------------------------------------------------------------
# cohort rules


def detect_self_report(timeline: UserTimeline, spec: CohortSpec) -> SelfReport | None:
    """Earliest self-report and the set of all disorders ever reported."""
    first: tuple[int, str] | None = None
    found: set[str] = set()
    for post in timeline.posts:
        text = normalize_text(post.body)
        for disorder in DISORDERS:
            if any(p in text for p in spec._compiled[disorder]):
                found.add(disorder)
                if first is None or post.created_utc < first[0]:
                    first = (post.created_utc, disorder)
    if first is None:
        return None
    return SelfReport(first[1], first[0], frozenset(found))


def year_bucket(timeline: UserTimeline | list[Post]) -> int:
    """UTC calendar year of the last retained post."""
    posts = timeline.posts if isinstance(timeline, UserTimeline) else timeline
    if not posts:
        raise ValueError("empty timeline has no year bucket")
    return utc_year(max(p.created_utc for p in posts))


@dataclass
class UserRecord:
    user_id: str
    label: str
    report_utc: int | None
    posts: list[Post]

    @property
    def year_bucket(self) -> int:
        return year_bucket(self.posts)

    def manifest_row(self) -> dict:
        return {
            "user_id": self.user_id,
            "label": self.label,
            "report_utc": self.report_utc,
            "n_posts": len(self.posts),
            "year_bucket": self.year_bucket,
        }


@dataclass
class CohortDataset:
    users: list[UserRecord]
    drops: dict = field(default_factory=dict)

    def __post_init__(self):
        self.users = sorted(self.users, key=lambda u: u.user_id)

    def by_label(self) -> dict[str, list[UserRecord]]:
        out: dict[str, list[UserRecord]] = {}
        for u in self.users:
            out.setdefault(u.label, []).append(u)
        return out

    def class_sizes(self) -> dict[str, int]:
        return dict(sorted(Counter(u.label for u in self.users).items()))

    def manifest(self) -> list[dict]:
        return [u.manifest_row() for u in self.users]

    def save(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "posts.jsonl").open("w", encoding="utf-8") as fh:
            for u in self.users:
                for p in u.posts:
                    fh.write(json.dumps(p.to_json(), sort_keys=True) + "\n")
        write_jsonl(out / "manifest.jsonl", self.manifest())
        (out / "drops.json").write_text(json.dumps(self.drops, indent=2, sort_keys=True) + "\n",
                                        encoding="utf-8")

    @classmethod
    def load(cls, data_dir) -> "CohortDataset":
        d = Path(data_dir)
        rows = list(read_jsonl(d / "manifest.jsonl"))
        posts: dict[str, list[Post]] = {r["user_id"]: [] for r in rows}
        for rec in read_jsonl(d / "posts.jsonl"):
            if rec["user_id"] in posts:
                posts[rec["user_id"]].append(
                    Post(rec["user_id"], int(rec["created_utc"]), rec.get("subreddit", ""), rec["body"]))
        users = []
        for r in rows:
            if r["label"] not in LABELS:
                raise CorpusError(f"unknown label {r['label']!r} for user {r['user_id']}")
            ps = sorted(posts[r["user_id"]], key=lambda p: p.created_utc)
            users.append(UserRecord(r["user_id"], r["label"], r.get("report_utc"), ps))
        drops_path = d / "drops.json"
        drops = json.loads(drops_path.read_text(encoding="utf-8")) if drops_path.exists() else {}
        return cls(users, drops)


def _in_range(post: Post, years: tuple[int, int]) -> bool:
    return years[0] <= utc_year(post.created_utc) <= years[1]


def build_cohort(timelines: Iterable[UserTimeline], spec: CohortSpec) -> CohortDataset:
    """Apply self-report labelling, pruning and class balancing.

    Self-report detection and the subreddit rules look at the full timeline;
    the year-range filter is applied afterwards to the retained posts.
    """
    top = {s.casefold() for s in spec.control_top_subreddits}
    excluded = {s.casefold() for s in spec.exclusion_subreddits}
    drops = Counter()
    kept: dict[str, list[UserRecord]] = {label: [] for label in LABELS}
    n_in = 0

    for tl in sorted(timelines, key=lambda t: t.user_id):
        n_in += 1
        report = detect_self_report(tl, spec)
        if report is not None:
            if len(report.disorders) > 1:
                drops["multi_disorder"] += 1
                continue
            posts = [p for p in tl.posts if p.created_utc < report.report_utc]
            if not posts:
                drops["no_posts_before_report"] += 1
                continue
            label, report_utc = report.disorder, report.report_utc
        else:
            subs = {p.subreddit.casefold() for p in tl.posts}
            if subs & excluded:
                drops["control_in_exclusion_subreddit"] += 1
                continue
            if not subs & top:
                drops["control_not_in_top_subreddits"] += 1
                continue
            posts, label, report_utc = tl.posts, "Control", None
        posts = [p for p in posts if _in_range(p, spec.time_range)]
        if not posts:
            drops["empty_after_time_range"] += 1
            continue
        kept[label].append(UserRecord(tl.user_id, label, report_utc, posts))

    before = {label: len(v) for label, v in kept.items()}
    report = {"n_users_in": n_in, "rules": dict(sorted(drops.items())),
              "class_sizes_before_balancing": before}
    empty = [label for label, n in before.items() if n == 0]
    if empty:
        raise CorpusError(f"classes empty after pruning: {empty}; drop counts: {dict(drops)}",
                          report)

    target = min(before.values())
    users: list[UserRecord] = []
    downsampled = {}
    for label in LABELS:
        group = kept[label]  # already sorted by user_id
        if len(group) > target:
            rng = rng_for(spec.seed, "downsample", label)
            pick = sorted(rng.choice(len(group), size=target, replace=False).tolist())
            group = [group[i] for i in pick]
        downsampled[label] = before[label] - len(group)
        users.extend(group)
    report["downsampled"] = downsampled
    report["class_size"] = target
    return CohortDataset(users, report)


# --------------------------------------------------------------------------
# JSONL helpers


def write_jsonl(path, rows: Iterable[dict]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_jsonl(path) -> Iterator[dict]:
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)
