"""Sentence segmentation and four-emotion labelling of posts.

Each surviving (non-interrogative) sentence gets binary flags for
(anger, fear, joy, sadness); a post's vector is the per-emotion sum over its
sentences. Labelling is pluggable: the built-in lexicon labeler, or labels
computed elsewhere (e.g. by a transformer classifier) and loaded from JSONL.
"""
from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Protocol

log = logging.getLogger(__name__)

EMOTIONS = ("anger", "fear", "joy", "sadness")
NEGATORS = frozenset({"not", "no", "never", "n't"})
NEGATION_WINDOW = 2


class EmotionError(Exception):
    pass


class EmotionVector(NamedTuple):
    anger: int = 0
    fear: int = 0
    joy: int = 0
    sadness: int = 0


ZERO = EmotionVector()


@dataclass(frozen=True)
class Sentence:
    text: str
    index_in_post: int


# --------------------------------------------------------------------------
# segmentation

_SENT = re.compile(r"[^.!?]+[.!?]*|[.!?]+")


def split_sentences(body: str) -> list[Sentence]:
    """Split on runs of ``.!?`` and on newlines; punctuation stays attached.

    ``index_in_post`` counts sentences before interrogative filtering, so it
    is a stable key for externally computed labels.
    """
    out: list[Sentence] = []
    for line in body.splitlines():
        for frag in _SENT.findall(line):
            frag = frag.strip()
            if frag:
                out.append(Sentence(frag, len(out)))
    return out


def is_interrogative(sentence: Sentence | str) -> bool:
    text = sentence.text if isinstance(sentence, Sentence) else sentence
    text = text.rstrip()
    return bool(text) and text[-1] == "?"


def filter_interrogative(sentences: list[Sentence]) -> list[Sentence]:
    return [s for s in sentences if not is_interrogative(s)]


# --------------------------------------------------------------------------
# labelers


class EmotionLabeler(Protocol):
    name: str

    def label(self, sentence: Sentence, user_id: str = "", post_index: int = 0) -> EmotionVector:
        ...


_TOKEN = re.compile(r"n't|[^\W_]+")
_NT = re.compile(r"n't\b")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumerics; ``n't`` kept as a token."""
    text = text.lower().replace("’", "'")
    return _TOKEN.findall(_NT.sub(" n't", text))


def load_lexicon(path=None) -> dict[str, frozenset]:
    """Read an ``emotion,word`` CSV (header optional). Default: bundled lexicon."""
    if path is None:
        text = resources.files("emotrans").joinpath("data/default_lexicon.csv").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    words: dict[str, set] = {e: set() for e in EMOTIONS}
    for lineno, row in enumerate(csv.reader(text.splitlines()), 1):
        if not row or row[0].startswith("#"):
            continue
        if lineno == 1 and [c.strip().lower() for c in row] == ["emotion", "word"]:
            continue
        if len(row) != 2:
            raise EmotionError(f"lexicon line {lineno}: expected 'emotion,word', got {row!r}")
        emotion, word = row[0].strip().lower(), row[1].strip().lower()
        if emotion not in words:
            raise EmotionError(f"lexicon line {lineno}: unknown emotion {emotion!r}")
        if word:
            words[emotion].add(word)
    empty = [e for e, ws in words.items() if not ws]
    if empty:
        raise EmotionError(f"lexicon has no words for {empty}")
    return {e: frozenset(ws) for e, ws in words.items()}


def lexicon_label(sentence: Sentence | str, lexicon: dict[str, frozenset]) -> EmotionVector:
    """Flag an emotion if any of its words occurs outside a negation window.

    A token at most two positions after a negator never triggers.
    """
    text = sentence.text if isinstance(sentence, Sentence) else sentence
    tokens = tokenize(text)
    flags = [0, 0, 0, 0]
    negated_until = -1
    for i, tok in enumerate(tokens):
        if tok in NEGATORS:
            negated_until = i + NEGATION_WINDOW
            continue
        if i <= negated_until:
            continue
        for k, emotion in enumerate(EMOTIONS):
            if tok in lexicon[emotion]:
                flags[k] = 1
    return EmotionVector(*flags)


class LexiconLabeler:
    name = "lexicon"

    def __init__(self, lexicon: dict[str, frozenset] | None = None):
        lexicon = lexicon if lexicon is not None else load_lexicon()
        missing = [e for e in EMOTIONS if e not in lexicon]
        if missing:
            raise EmotionError(f"lexicon missing emotions {missing}")
        self.lexicon = lexicon

    def label(self, sentence: Sentence, user_id: str = "", post_index: int = 0) -> EmotionVector:
        return lexicon_label(sentence, self.lexicon)


class PrecomputedLabeler:
    """Looks labels up by (user_id, post_index, sentence_index)."""

    name = "precomputed"

    def __init__(self, labels: dict[tuple[str, int, int], EmotionVector]):
        self.labels = labels
        self.n_missing = 0

    def label(self, sentence: Sentence, user_id: str = "", post_index: int = 0) -> EmotionVector:
        v = self.labels.get((user_id, post_index, sentence.index_in_post))
        if v is None:
            self.n_missing += 1
            return ZERO
        return v


def load_precomputed_labels(path) -> PrecomputedLabeler:
    """Read rows ``{user_id, post_index, sentence_index, anger, fear, joy, sadness}``."""
    labels: dict[tuple[str, int, int], EmotionVector] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                key = (str(row["user_id"]), int(row["post_index"]), int(row["sentence_index"]))
                values = [row[e] for e in EMOTIONS]
            except (ValueError, KeyError, TypeError) as exc:
                raise EmotionError(f"{path}:{lineno}: bad label row ({exc})") from exc
            for e, v in zip(EMOTIONS, values):
                if isinstance(v, bool) or v not in (0, 1) or not isinstance(v, int):
                    raise EmotionError(f"{path}:{lineno}: {e}={v!r} is not 0/1")
            labels[key] = EmotionVector(*values)
    return PrecomputedLabeler(labels)


# --------------------------------------------------------------------------
# aggregation


def sentence_labels(body: str, labeler: EmotionLabeler, user_id: str = "",
                    post_index: int = 0) -> list[tuple[Sentence, EmotionVector]]:
    kept = filter_interrogative(split_sentences(body))
    return [(s, labeler.label(s, user_id, post_index)) for s in kept]


def post_emotion(body: str, labeler: EmotionLabeler, user_id: str = "",
                 post_index: int = 0) -> EmotionVector:
    """Per-emotion count of surviving sentences flagged for that emotion."""
    totals = [0, 0, 0, 0]
    for _, v in sentence_labels(body, labeler, user_id, post_index):
        for k in range(4):
            totals[k] += v[k]
    return EmotionVector(*totals)


# --------------------------------------------------------------------------
# whole datasets

POST_EMOTIONS = "post_emotions.jsonl"
SENTENCE_LABELS = "sentence_labels.jsonl"


def _label_user(args):
    user_id, bodies, labeler = args
    sent_rows, post_rows = [], []
    for i, body in enumerate(bodies):
        totals = [0, 0, 0, 0]
        for s, v in sentence_labels(body, labeler, user_id, i):
            sent_rows.append({"user_id": user_id, "post_index": i,
                              "sentence_index": s.index_in_post, **v._asdict()})
            for k in range(4):
                totals[k] += v[k]
        post_rows.append((i, totals))
    return sent_rows, post_rows


def label_dataset(dataset, labeler: EmotionLabeler, jobs: int = 1) -> tuple[list[dict], list[dict]]:
    """Label every post of every user.

    ``post_index`` is the position of a post in the user's time-sorted timeline.
    Returns (sentence rows, post rows); output order does not depend on ``jobs``.
    """
    tasks = [(u.user_id, [p.body for p in u.posts], labeler) for u in dataset.users]
    if jobs > 1 and isinstance(labeler, LexiconLabeler) and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_label_user, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_label_user(t) for t in tasks]
    sentences, posts = [], []
    for u, (sent_rows, post_rows) in zip(dataset.users, results):
        sentences.extend(sent_rows)
        for i, totals in post_rows:
            posts.append({"user_id": u.user_id, "post_index": i,
                          "created_utc": u.posts[i].created_utc,
                          **dict(zip(EMOTIONS, totals))})
    if isinstance(labeler, PrecomputedLabeler) and labeler.n_missing:
        log.warning("%d sentences had no precomputed label and were treated as emotion-free",
                    labeler.n_missing)
    return sentences, posts


def read_post_emotions(path) -> dict[str, tuple[list[int], list[list[int]]]]:
    """Per-user (times, vectors) from a post-emotions JSONL, sorted by time."""
    by_user: dict[str, list[tuple[int, int, list[int]]]] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                rec = (int(row["created_utc"]), int(row["post_index"]), [int(row[e]) for e in EMOTIONS])
            except (ValueError, KeyError, TypeError) as exc:
                raise EmotionError(f"{path}:{lineno}: bad post-emotion row ({exc})") from exc
            by_user.setdefault(str(row["user_id"]), []).append(rec)
    out = {}
    for uid, recs in by_user.items():
        recs.sort(key=lambda r: (r[0], r[1]))
        out[uid] = ([r[0] for r in recs], [r[2] for r in recs])
    return out
