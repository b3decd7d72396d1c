"""Content baseline: one tf-idf document per user.

tf is the raw count, idf = ln((1 + N) / (1 + df)) + 1 over the N training
documents, rows are L2-normalised. The vocabulary comes from training
documents only and never contains the excluded disorder/drug terms.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from collections import Counter

import numpy as np

_TOKEN = re.compile(r"[^\W_]+")


class VocabularyError(Exception):
    pass


def read_term_list(path=None, default: str | None = None) -> list[str]:
    """One term per line; ``#`` comments and blanks skipped; lowercased."""
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
    else:
        text = resources.files("emotrans").joinpath(f"data/{default}").read_text("utf-8")
    terms = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            terms.append(line.lower())
    return terms


def default_disorder_terms() -> list[str]:
    return read_term_list(default="disorder_terms.txt")


def default_drug_terms() -> list[str]:
    return read_term_list(default="drug_terms.txt")


@dataclass
class TfidfConfig:
    disorder_terms: list[str] = field(default_factory=default_disorder_terms)
    drug_terms: list[str] = field(default_factory=default_drug_terms)
    min_doc_freq: int = 1
    lowercase: bool = True

    @property
    def excluded(self) -> frozenset:
        return frozenset(t.lower() for t in self.disorder_terms + self.drug_terms)


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    if lowercase:
        text = text.lower()
    return [t for t in _TOKEN.findall(text) if len(t) > 1]


class TfidfVectorizer:
    def __init__(self, config: TfidfConfig | None = None):
        self.config = config or TfidfConfig()
        self.vocabulary: list[str] = []
        self.index: dict[str, int] = {}
        self.idf: np.ndarray | None = None

    def _counts(self, doc: str) -> Counter:
        return Counter(tokenize(doc, self.config.lowercase))

    def fit(self, docs: list[str]) -> "TfidfVectorizer":
        excluded = self.config.excluded
        df: Counter = Counter()
        for doc in docs:
            df.update(set(self._counts(doc)))
        vocab = sorted(t for t, n in df.items()
                       if n >= self.config.min_doc_freq and t.lower() not in excluded)
        if not vocab:
            raise VocabularyError("tf-idf vocabulary is empty after exclusions")
        self.vocabulary = vocab
        self.index = {t: i for i, t in enumerate(vocab)}
        n = len(docs)
        dfs = np.array([df[t] for t in vocab], dtype=np.float64)
        self.idf = np.log((1.0 + n) / (1.0 + dfs)) + 1.0
        return self

    def transform(self, docs: list[str]) -> np.ndarray:
        if self.idf is None:
            raise VocabularyError("vectorizer is not fitted")
        X = np.zeros((len(docs), len(self.vocabulary)), dtype=np.float64)
        for r, doc in enumerate(docs):
            for tok, c in self._counts(doc).items():
                j = self.index.get(tok)
                if j is not None:
                    X[r, j] = c
        X *= self.idf
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        np.divide(X, norms, out=X, where=norms > 0)
        return X

    def fit_transform(self, docs: list[str]) -> np.ndarray:
        return self.fit(docs).transform(docs)


def tfidf_features(train_docs: list[str], test_docs: list[str] | None = None,
                   config: TfidfConfig | None = None):
    """Fit on ``train_docs``; return ``(X_train, X_test, vectorizer)``."""
    vec = TfidfVectorizer(config).fit(train_docs)
    X_test = vec.transform(test_docs) if test_docs is not None else None
    return vec.transform(train_docs), X_test, vec
