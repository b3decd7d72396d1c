"""Emotion-state sequences and first-order transition fingerprints.

State encoding: for a clamped window vector (anger, fear, joy, sadness) the
state index is ``8*anger + 4*fear + 2*joy + sadness``; 16 is no-act (a window
without posts). A fingerprint flattens row-major to 289 features, feature
``17*j + k`` being P(next = k | current = j).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels

N_STATES = 17
NO_ACT = 16
N_FEATURES = N_STATES * N_STATES
_LETTERS = "AFJS"


class FingerprintError(Exception):
    pass


def encode(vector: Sequence[int]) -> int:
    a, f, j, s = (1 if v > 0 else 0 for v in vector)
    return 8 * a + 4 * f + 2 * j + s


def decode(state: int) -> tuple[int, int, int, int]:
    if not 0 <= state < NO_ACT:
        raise ValueError(f"state {state} has no emotion vector")
    return ((state >> 3) & 1, (state >> 2) & 1, (state >> 1) & 1, state & 1)


def state_label(state: int) -> str:
    """``N``, ``A``, ``AF``, ... as in the heatmaps; ``no-act`` for 16."""
    if state == NO_ACT:
        return "no-act"
    name = "".join(c for c, bit in zip(_LETTERS, decode(state)) if bit)
    return name or "N"


STATE_LABELS = tuple(state_label(s) for s in range(N_STATES))


@dataclass(frozen=True)
class WindowConfig:
    window_seconds: int = 1800
    step_seconds: int = 1800

    def __post_init__(self):
        if self.window_seconds <= 0 or self.step_seconds <= 0:
            raise ValueError("window and step must be positive")
        if self.step_seconds > self.window_seconds:
            raise ValueError("step must not exceed window")


@dataclass(frozen=True)
class Fingerprint:
    matrix: np.ndarray
    counts: np.ndarray
    n_windows: int

    def flatten(self) -> np.ndarray:
        return flatten(self)


def _bits(vectors) -> np.ndarray:
    v = np.asarray(vectors, dtype=np.int64).reshape(-1, 4) > 0
    return (8 * v[:, 0] + 4 * v[:, 1] + 2 * v[:, 2] + v[:, 3]).astype(np.int8)


def window_states(times, vectors, config: WindowConfig = WindowConfig()) -> np.ndarray:
    """Tile ``[t0, t_last]`` into windows and map each to a state.

    Windows start at the first post and advance by ``step_seconds``; a post at
    ``t`` belongs to window ``w`` iff ``t0 + w*step <= t < t0 + w*step + window``.
    The sequence stops at the last window starting at or before the last post.
    """
    times = np.asarray(times, dtype=np.int64)
    if times.size == 0:
        return np.empty(0, dtype=np.int8)
    if np.any(np.diff(times) < 0):
        raise FingerprintError("posts must be sorted by created_utc")
    return kernels.tile_windows(times, _bits(vectors), config.window_seconds, config.step_seconds)


def _from_counts(counts: np.ndarray, n_windows: int) -> Fingerprint:
    totals = counts.sum(axis=1, keepdims=True)
    matrix = np.divide(counts, totals, out=np.zeros(counts.shape, dtype=np.float64),
                       where=totals > 0)
    return Fingerprint(matrix, counts, int(n_windows))


def transition_matrix(states) -> Fingerprint:
    """Maximum-likelihood first-order transition matrix; unvisited rows stay zero."""
    s = np.asarray(states, dtype=np.int64)
    if s.size and (s.min() < 0 or s.max() >= N_STATES):
        raise FingerprintError("states must lie in 0..16")
    counts = np.zeros((N_STATES, N_STATES), dtype=np.int64)
    if s.size >= 2:
        np.add.at(counts, (s[:-1], s[1:]), 1)
    return _from_counts(counts, s.size)


def fingerprint_timeline(times, vectors, config: WindowConfig = WindowConfig()) -> Fingerprint:
    return transition_matrix(window_states(times, vectors, config))


def batch_fingerprints(timelines, config: WindowConfig = WindowConfig()) -> list[Fingerprint]:
    """Fingerprints for many ``(times, vectors)`` pairs in one kernel call."""
    lengths = [len(t) for t, _ in timelines]
    offsets = np.zeros(len(timelines) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    if offsets[-1]:
        times = np.concatenate([np.asarray(t, dtype=np.int64) for t, _ in timelines])
        bits = np.concatenate([_bits(v) if len(v) else np.empty(0, np.int8)
                               for _, v in timelines])
    else:
        times, bits = np.empty(0, np.int64), np.empty(0, np.int8)
    for u in range(len(timelines)):
        seg = times[offsets[u]:offsets[u + 1]]
        if np.any(np.diff(seg) < 0):
            raise FingerprintError(f"timeline {u} is not sorted by time")
    counts, n_windows = kernels.batch_transition_counts(
        times, bits, offsets, config.window_seconds, config.step_seconds)
    return [_from_counts(counts[u], n_windows[u]) for u in range(len(timelines))]


def flatten(fp: Fingerprint | np.ndarray) -> np.ndarray:
    m = fp.matrix if isinstance(fp, Fingerprint) else np.asarray(fp, dtype=np.float64)
    if m.shape != (N_STATES, N_STATES):
        raise FingerprintError(f"expected 17x17 matrix, got {m.shape}")
    return m.reshape(N_FEATURES).copy()


def cohort_mean_matrix(fingerprints) -> np.ndarray:
    mats = [fp.matrix if isinstance(fp, Fingerprint) else np.asarray(fp) for fp in fingerprints]
    if not mats:
        raise FingerprintError("cannot average an empty cohort")
    return np.mean(np.stack(mats), axis=0)


def drop_noact_column(matrix) -> np.ndarray:
    """17x16 view without the transition-to-no-act column; rows not renormalised."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (N_STATES, N_STATES):
        raise FingerprintError(f"expected 17x17 matrix, got {m.shape}")
    return m[:, :NO_ACT].copy()


def feature_names() -> list[str]:
    return [f"f{i}" for i in range(N_FEATURES)]


# --------------------------------------------------------------------------
# fingerprint store: CSV of flattened matrices plus a JSON sidecar

STORE_CSV = "fingerprints.csv"
STORE_META = "fingerprints.json"


@dataclass
class FingerprintStore:
    user_ids: list[str]
    labels: list[str]
    years: list[int]
    features: np.ndarray
    config: WindowConfig = WindowConfig()
    n_windows: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64).reshape(-1, N_FEATURES)
        n = len(self.user_ids)
        if not (len(self.labels) == len(self.years) == self.features.shape[0] == n):
            raise FingerprintError("store columns differ in length")

    def __len__(self) -> int:
        return len(self.user_ids)

    def matrices(self) -> np.ndarray:
        return self.features.reshape(-1, N_STATES, N_STATES)

    def subset(self, mask) -> "FingerprintStore":
        idx = np.flatnonzero(np.asarray(mask))
        return FingerprintStore([self.user_ids[i] for i in idx], [self.labels[i] for i in idx],
                                [self.years[i] for i in idx], self.features[idx], self.config,
                                [self.n_windows[i] for i in idx] if self.n_windows else [])

    def task(self, disorder: str, control: str = "Control") -> tuple["FingerprintStore", np.ndarray]:
        """Rows of ``control`` and ``disorder`` users with binary labels (disorder = 1)."""
        mask = np.array([lab in (control, disorder) for lab in self.labels], dtype=bool)
        sub = self.subset(mask)
        y = np.array([lab == disorder for lab in sub.labels], dtype=np.int8)
        return sub, y

    def save(self, out_dir) -> None:
        """Write ``fingerprints.csv`` (floats in round-trip repr) and its sidecar."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with (out / STORE_CSV).open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "label", "year_bucket"] + feature_names())
            for uid, lab, year, row in zip(self.user_ids, self.labels, self.years, self.features):
                w.writerow([uid, lab, year] + [repr(float(v)) for v in row])
        meta = {
            "state_encoding": "index = 8*anger + 4*fear + 2*joy + sadness; 16 = no-act",
            "state_labels": list(STATE_LABELS),
            "flatten": "row-major; feature 17*j + k = P(next = k | current = j)",
            "window_seconds": self.config.window_seconds,
            "step_seconds": self.config.step_seconds,
            "n_users": len(self),
            "n_windows": dict(zip(self.user_ids, self.n_windows)) if self.n_windows else {},
        }
        (out / STORE_META).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n",
                                      encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FingerprintStore":
        """Read a store from its directory or directly from the CSV file."""
        p = Path(path)
        csv_path = p / STORE_CSV if p.is_dir() else p
        meta_path = csv_path.with_name(STORE_META)
        ids, labels, years, rows = [], [], [], []
        with csv_path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or header[:3] != ["user_id", "label", "year_bucket"] \
                    or len(header) != 3 + N_FEATURES:
                raise FingerprintError(f"{csv_path}: not a fingerprint CSV")
            for lineno, rec in enumerate(reader, 2):
                if len(rec) != len(header):
                    raise FingerprintError(f"{csv_path}:{lineno}: expected {len(header)} fields")
                ids.append(rec[0])
                labels.append(rec[1])
                years.append(int(rec[2]))
                rows.append([float(v) for v in rec[3:]])
        config, n_windows = WindowConfig(), []
        if meta_path.exists():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            config = WindowConfig(int(meta["window_seconds"]), int(meta["step_seconds"]))
            nw = meta.get("n_windows") or {}
            n_windows = [int(nw[u]) for u in ids] if nw else []
        features = np.array(rows, dtype=np.float64).reshape(-1, N_FEATURES)
        return cls(ids, labels, years, features, config, n_windows)
