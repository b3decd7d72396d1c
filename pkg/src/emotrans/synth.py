"""Synthetic cohorts with known class transition matrices.

Each user's window states are drawn from their class's 17-state Markov chain
and turned back into posts: one post per active window, carrying exactly one
lexicon word for every emotion bit of the state. Labelling those posts with
the lexicon labeler and re-fingerprinting recovers the drawn state sequence
exactly, which makes the generator an end-to-end oracle.

Optional per-(class, year) drift tokens change only filler vocabulary, so
content features go stale across years while emotion states do not.
"""
from __future__ import annotations

import bisect
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import (
    DISORDER_WORDS,
    LABELS,
    CohortDataset,
    Post,
    UserRecord,
    write_jsonl,
)
from .emotion import EMOTIONS, NEGATORS, load_lexicon
from .fingerprint import N_STATES, NO_ACT, decode
from .seeding import rng_for

WINDOW_SECONDS = 1800

DEFAULT_EMOTION_TOKENS = {
    "anger": ["angry", "furious", "annoyed", "irritated", "livid", "outraged", "fuming", "enraged"],
    "fear": ["afraid", "scared", "terrified", "nervous", "worried", "frightened", "uneasy", "petrified"],
    "joy": ["happy", "delighted", "cheerful", "thrilled", "glad", "excited", "grateful", "pleased"],
    "sadness": ["sad", "miserable", "heartbroken", "gloomy", "lonely", "unhappy", "hopeless", "devastated"],
}
DEFAULT_FILLER = [
    "weekend", "coffee", "movie", "office", "garden", "phone", "dinner", "game", "music",
    "city", "street", "project", "book", "weather", "market", "kitchen", "laptop", "bike",
    "beach", "season", "update", "plan", "meeting", "recipe", "video", "picture", "camera",
    "guitar", "football", "podcast", "series", "train", "bus", "car", "shop", "park",
    "window", "table", "paper", "email",
]
POST_SUBREDDITS = ["AskReddit", "news", "funny", "pics", "politics", "worldnews",
                   "todayilearned", "relationships", "teenagers", "nfl"]
_SYLLABLES = ["ka", "lo", "mi", "ren", "tu", "zor", "vel", "qua", "bri", "dax",
              "po", "sen", "thi", "gar", "nu", "fey", "jo", "wix", "hal", "cru"]
_WORD = re.compile(r"^[a-z0-9]{2,}$")


class SynthError(Exception):
    pass


def default_class_matrices() -> dict[str, np.ndarray]:
    data = json.loads(resources.files("emotrans").joinpath("data/class_matrices.json").read_text("utf-8"))
    return {c: np.asarray(m, dtype=np.float64) for c, m in data["classes"].items()}


def make_drift_tokens(classes, start_year: int, end_year: int, slots: int = 4,
                      tokens_per_slot: int = 5, seed: int = 0) -> dict[tuple[str, int], list[str]]:
    """Per-(class, year) topic words; years closer than ``slots`` share some words.

    Year ``y`` of class ``c`` uses topic slots ``y - start .. y - start + slots - 1``
    of that class, so consecutive years overlap in ``slots - 1`` slots and years
    ``slots`` or more apart share nothing.
    """
    n_years = end_year - start_year + 1
    vocab: dict[tuple[str, int], list[str]] = {}
    used: set[str] = set()
    for c in classes:
        for slot in range(n_years + slots - 1):
            rng = rng_for(seed, "drift-word", c, slot)
            words = []
            while len(words) < tokens_per_slot:
                w = "".join(rng.choice(_SYLLABLES, size=3))
                if w not in used:
                    used.add(w)
                    words.append(w)
            vocab[(c, slot)] = words
    return {(c, y): [w for s in range(y - start_year, y - start_year + slots) for w in vocab[(c, s)]]
            for c in classes for y in range(start_year, end_year + 1)}


@dataclass
class GeneratorSpec:
    class_matrices: dict[str, np.ndarray] = field(default_factory=default_class_matrices)
    users_per_class: int = 200
    windows_per_user: int = 500
    start_year: int = 2011
    end_year: int = 2019
    emotion_token_map: dict[str, list[str]] = field(default_factory=lambda: {
        e: list(v) for e, v in DEFAULT_EMOTION_TOKENS.items()})
    filler_tokens: list[str] = field(default_factory=lambda: list(DEFAULT_FILLER))
    drift_tokens: dict[tuple[str, int], list[str]] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        self.class_matrices = {c: np.asarray(m, dtype=np.float64)
                               for c, m in self.class_matrices.items()}
        self.validate()

    def validate(self) -> None:
        unknown = set(self.class_matrices) - set(LABELS)
        if unknown:
            raise SynthError(f"unknown classes {sorted(unknown)}")
        for c, m in self.class_matrices.items():
            if m.shape != (N_STATES, N_STATES):
                raise SynthError(f"{c}: matrix must be 17x17, got {m.shape}")
            if m.min() < 0 or np.any(np.abs(m.sum(axis=1) - 1.0) > 1e-12):
                raise SynthError(f"{c}: every row must be a probability vector (sum 1 +- 1e-12)")
        if self.windows_per_user < 2:
            raise SynthError("windows_per_user must be >= 2")
        if self.users_per_class < 1:
            raise SynthError("users_per_class must be >= 1")
        if self.start_year > self.end_year:
            raise SynthError("start_year after end_year")
        if self.windows_per_user * WINDOW_SECONDS > 300 * 86400:
            raise SynthError("timelines must fit inside one calendar year")
        missing = [e for e in EMOTIONS if not self.emotion_token_map.get(e)]
        if missing:
            raise SynthError(f"emotion_token_map missing {missing}")
        for tok in self.filler_tokens + [t for ts in self.drift_tokens.values() for t in ts]:
            if not _WORD.match(tok) or tok in NEGATORS:
                raise SynthError(f"bad filler/drift token {tok!r}")

    def check_lexicon(self, lexicon: dict[str, frozenset]) -> None:
        """Emotion tokens must map to exactly their own emotion; others to none."""
        for e, toks in self.emotion_token_map.items():
            for t in toks:
                hits = [x for x in EMOTIONS if t in lexicon[x]]
                if hits != [e]:
                    raise SynthError(f"token {t!r} for {e} is labelled {hits} by the lexicon")
        for t in self.filler_tokens + [t for ts in self.drift_tokens.values() for t in ts]:
            if any(t in lexicon[x] for x in EMOTIONS):
                raise SynthError(f"filler token {t!r} is an emotion word")

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        d = dict(d)
        kw = {}
        mats = d.pop("class_matrices", "default")
        if mats != "default":
            kw["class_matrices"] = {c: np.asarray(m) for c, m in mats.items()}
        toks = d.pop("emotion_token_map", "default")
        if toks != "default":
            kw["emotion_token_map"] = toks
        drift = d.pop("drift", None)
        for key in ("users_per_class", "windows_per_user", "start_year", "end_year", "seed"):
            if key in d:
                kw[key] = int(d.pop(key))
        if "filler_tokens" in d:
            kw["filler_tokens"] = list(d.pop("filler_tokens"))
        if d:
            raise SynthError(f"unknown generator spec keys {sorted(d)}")
        spec = cls(**kw)
        if drift:
            if "tokens" in drift:
                spec.drift_tokens = {(c, int(y)): list(ts)
                                     for c, by_year in drift["tokens"].items()
                                     for y, ts in by_year.items()}
            else:
                spec.drift_tokens = make_drift_tokens(
                    sorted(spec.class_matrices), spec.start_year, spec.end_year,
                    int(drift.get("slots", 4)), int(drift.get("tokens_per_slot", 5)), spec.seed)
            spec.validate()
        return spec

    @classmethod
    def load(cls, path) -> "GeneratorSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        drift = None
        if self.drift_tokens:
            drift = {"tokens": {}}
            for (c, y), ts in sorted(self.drift_tokens.items()):
                drift["tokens"].setdefault(c, {})[str(y)] = ts
        return {
            "class_matrices": {c: m.tolist() for c, m in sorted(self.class_matrices.items())},
            "users_per_class": self.users_per_class,
            "windows_per_user": self.windows_per_user,
            "start_year": self.start_year,
            "end_year": self.end_year,
            "emotion_token_map": self.emotion_token_map,
            "filler_tokens": self.filler_tokens,
            "drift": drift,
            "seed": self.seed,
        }


# --------------------------------------------------------------------------
# Markov chain sampling


def _check_chain(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SynthError("transition matrix must be square")
    if m.min() < 0:
        raise SynthError("negative transition probability")
    sums = m.sum(axis=1)
    live = sums > 0
    if np.any(np.abs(sums[live] - 1.0) > 1e-9):
        raise SynthError("non-zero rows must sum to 1")
    if not live.any():
        raise SynthError("matrix has no transitions")
    return m, live


def stationary_distribution(matrix) -> np.ndarray | None:
    """Unique stationary distribution, or None when it is not unique/defined."""
    m, live = _check_chain(matrix)
    if not live.all():
        return None
    vals, vecs = np.linalg.eig(m.T)
    ones = np.flatnonzero(np.abs(vals - 1.0) < 1e-9)
    if ones.size != 1:
        return None
    pi = np.real(vecs[:, ones[0]])
    pi = np.abs(pi) / np.abs(pi).sum()
    return pi


def initial_distribution(matrix) -> np.ndarray:
    pi = stationary_distribution(matrix)
    if pi is not None:
        return pi
    _, live = _check_chain(matrix)
    return live / live.sum()


def sample_chain(matrix, n_steps: int, rng: np.random.Generator, initial=None) -> np.ndarray:
    """Draw ``n_steps`` states; the start comes from ``initial`` or the stationary law.

    Without a unique stationary distribution the start is uniform over states
    with outgoing transitions. Reaching a state without transitions is an error.
    """
    m, live = _check_chain(matrix)
    n = m.shape[0]
    p0 = initial_distribution(m) if initial is None else np.asarray(initial, dtype=np.float64)
    # every state reachable from the start support must have transitions
    seen = set(np.flatnonzero(p0 > 0).tolist())
    frontier = list(seen)
    while frontier:
        s = frontier.pop()
        if not live[s]:
            raise SynthError(f"state {s} is reachable but has no outgoing transitions")
        for t in np.flatnonzero(m[s] > 0).tolist():
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    cum = [np.cumsum(row).tolist() for row in m]
    last = [int(np.flatnonzero(row > 0)[-1]) if row.any() else 0 for row in m]
    u = rng.random(n_steps).tolist()
    out = np.empty(n_steps, dtype=np.int64)
    if n_steps == 0:
        return out
    c0 = np.cumsum(p0).tolist()
    s = min(bisect.bisect_right(c0, u[0]), int(np.flatnonzero(p0 > 0)[-1]))
    out[0] = s
    for i in range(1, n_steps):
        k = bisect.bisect_right(cum[s], u[i])
        s = k if k < n and k <= last[s] else last[s]
        out[i] = s
    return out


def sample_user_states(matrix, n_windows: int, rng: np.random.Generator) -> np.ndarray:
    """Chain for one synthetic user: starts active, trailing no-act run removed.

    Windows are anchored at a user's first post and end at the last one, so
    only sequences that begin and end with an active state survive the
    post round-trip unchanged.
    """
    p0 = initial_distribution(matrix).copy()
    p0[NO_ACT] = 0.0
    if p0.sum() == 0:
        raise SynthError("chain never leaves the no-act state")
    states = sample_chain(matrix, n_windows, rng, p0 / p0.sum())
    active = np.flatnonzero(states != NO_ACT)
    return states[: active[-1] + 1]


# --------------------------------------------------------------------------
# posts


def compose_body(state: int, spec: GeneratorSpec, rng: np.random.Generator,
                 drift: list[str] | None = None) -> str:
    words = [str(rng.choice(spec.emotion_token_map[e]))
             for e, bit in zip(EMOTIONS, decode(state)) if bit]
    # with drift the (class, year) topic words replace the shared filler
    pool = drift if drift else spec.filler_tokens
    words += [str(w) for w in rng.choice(pool, size=int(rng.integers(2, 5)))]
    words = [words[i] for i in rng.permutation(len(words))]
    return " ".join(words).capitalize() + "."


def emit_posts(states, spec: GeneratorSpec, user_id: str, t0: int,
               rng: np.random.Generator, drift: list[str] | None = None) -> list[Post]:
    """One declarative post per active window ``w`` at ``t0 + w*1800``."""
    posts = []
    for w, s in enumerate(np.asarray(states).tolist()):
        if not 0 <= s < N_STATES:
            raise SynthError(f"invalid state {s}")
        if s == NO_ACT:
            continue
        sub = str(rng.choice(POST_SUBREDDITS))
        posts.append(Post(user_id, int(t0 + w * WINDOW_SECONDS), sub,
                          compose_body(s, spec, rng, drift)))
    return posts


def _year_bounds(year: int) -> tuple[int, int]:
    lo = int(datetime(year, 1, 1, tzinfo=timezone.utc).timestamp())
    hi = int(datetime(year + 1, 1, 1, tzinfo=timezone.utc).timestamp())
    return lo, hi


@dataclass
class SyntheticCohort:
    spec: GeneratorSpec
    dataset: CohortDataset
    raw_posts: list[Post]
    states: dict[str, np.ndarray]
    years: dict[str, int]

    def save(self, out_dir) -> None:
        out = Path(out_dir)
        self.dataset.save(out)
        write_jsonl(out / "raw_posts.jsonl", (p.to_json() for p in self.raw_posts))
        write_jsonl(out / "truth.jsonl", (
            {"user_id": u, "label": lab, "year": self.years[u],
             "states": " ".join(map(str, self.states[u].tolist()))}
            for u, lab in sorted((r.user_id, r.label) for r in self.dataset.users)))
        (out / "generator_spec.json").write_text(
            json.dumps(self.spec.to_dict(), sort_keys=True) + "\n", encoding="utf-8")


def build_synthetic_cohort(spec: GeneratorSpec, lexicon=None) -> SyntheticCohort:
    """Generate ``users_per_class`` users per class, spread evenly over the years.

    User ``i`` of a class posts in year ``start_year + i mod n_years``. Disorder
    users get a self-report post right after their last generated post, so the
    raw corpus also exercises the cohort rules.
    """
    spec.check_lexicon(lexicon if lexicon is not None else load_lexicon())
    years = list(range(spec.start_year, spec.end_year + 1))
    span = (spec.windows_per_user + 2) * WINDOW_SECONDS
    users, raw, all_states, user_year = [], [], {}, {}
    for label in sorted(spec.class_matrices, key=LABELS.index):
        matrix = spec.class_matrices[label]
        for i in range(spec.users_per_class):
            uid = f"syn-{label.lower()}-{i:05d}"
            year = years[i % len(years)]
            states = sample_user_states(matrix, spec.windows_per_user,
                                        rng_for(spec.seed, "chain", label, i))
            text_rng = rng_for(spec.seed, "text", label, i)
            lo, hi = _year_bounds(year)
            t0 = lo + int(text_rng.integers(0, hi - lo - span))
            posts = emit_posts(states, spec, uid, t0, text_rng, spec.drift_tokens.get((label, year)))
            report_utc = None
            raw.extend(posts)
            if label != "Control":
                report_utc = posts[-1].created_utc + WINDOW_SECONDS
                raw.append(Post(uid, report_utc, "AskReddit",
                                f"I was diagnosed with {DISORDER_WORDS[label]} last month."))
            users.append(UserRecord(uid, label, report_utc, posts))
            all_states[uid] = states
            user_year[uid] = year
    sizes = {label: spec.users_per_class for label in spec.class_matrices}
    drops = {"n_users_in": len(users), "rules": {}, "class_sizes_before_balancing": sizes,
             "downsampled": {label: 0 for label in sizes}, "class_size": spec.users_per_class,
             "source": "synthetic"}
    return SyntheticCohort(spec, CohortDataset(users, drops), raw, all_states, user_year)


def average_row_tv(a, b) -> float:
    """Mean over rows of the total-variation distance between two transition matrices."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.mean(0.5 * np.abs(a - b).sum(axis=1)))
