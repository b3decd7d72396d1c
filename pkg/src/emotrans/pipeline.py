"""Config-driven end-to-end run: corpus -> emotion -> fingerprint -> analysis -> eval.

Every stage writes into ``<output>/stages/<stage>-<key>/`` where ``key`` hashes
the stage's own config together with the content hashes of its inputs. A stage
directory with a completed ``stage.json`` is reused as-is on the next run. The
final ``metrics.json`` and ``manifest.json`` (artifact -> sha256) land in
``<output>``.
"""
from __future__ import annotations

import hashlib
import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    DISORDERS,
    LABELS,
    CohortDataset,
    CohortSpec,
    build_cohort,
    group_timelines,
    ingest_posts,
    write_jsonl,
)
from .emotion import (
    POST_EMOTIONS,
    SENTENCE_LABELS,
    LexiconLabeler,
    label_dataset,
    load_lexicon,
    load_precomputed_labels,
    read_post_emotions,
)
from .evaluation import (
    compute_metrics,
    cross_validate,
    er_featurizer,
    fpr_at_full_tpr,
    make_splits,
    predict_labels,
    temporal_harness,
)
from .fingerprint import (
    FingerprintStore,
    WindowConfig,
    batch_fingerprints,
    cohort_mean_matrix,
    drop_noact_column,
    flatten,
)
from .models import KINDS, TfidfConfig, TfidfVectorizer, canonical_kind, train
from .models.tfidf import read_term_list
from .plots import emit_gap_curve, emit_heatmap
from .seeding import derive_seed

log = logging.getLogger(__name__)

STAGES = ("corpus", "emotion", "fingerprint", "analysis", "eval")


class ConfigError(Exception):
    """Invalid pipeline configuration (exit code 1)."""


class StageError(Exception):
    """A stage failed while running (exit code 2)."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


# --------------------------------------------------------------------------
# hashing


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dir_hashes(root) -> dict[str, str]:
    root = Path(root)
    return {p.relative_to(root).as_posix(): file_sha256(p)
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "stage.json"}


def config_key(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode("utf-8")).hexdigest()[:16]


# --------------------------------------------------------------------------
# config


def _resolve(base: Path, p):
    if p is None:
        return None
    p = Path(p)
    return p if p.is_absolute() else (base / p)


@dataclass
class EvalPlan:
    tasks: list[str] = field(default_factory=lambda: list(DISORDERS))
    fractions: tuple[float, float, float] = (0.70, 0.15, 0.15)
    cv_folds: int = 5
    tfidf: bool = True
    temporal: dict | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "EvalPlan":
        d = dict(d)
        plan = cls(
            tasks=list(d.pop("tasks", DISORDERS)),
            fractions=tuple(float(f) for f in d.pop("fractions", (0.70, 0.15, 0.15))),
            cv_folds=int(d.pop("cv_folds", 5)),
            tfidf=bool(d.pop("tfidf", True)),
            temporal=d.pop("temporal", None),
        )
        if d:
            raise ConfigError(f"unknown eval keys {sorted(d)}")
        bad = [t for t in plan.tasks if t not in DISORDERS]
        if bad:
            raise ConfigError(f"unknown tasks {bad}; choose from {list(DISORDERS)}")
        if len(plan.fractions) != 3 or min(plan.fractions) < 0 \
                or abs(sum(plan.fractions) - 1) > 1e-9:
            raise ConfigError(f"split fractions must be three non-negatives summing to 1")
        if plan.cv_folds and plan.cv_folds < 2:
            raise ConfigError("cv_folds must be 0 (off) or >= 2")
        if plan.temporal is not None:
            t = dict(plan.temporal)
            gaps = [int(g) for g in t.pop("gaps", range(1, 8))]
            feats = list(t.pop("features", ["ER", "tfidf"] if plan.tfidf else ["ER"]))
            model = canonical_kind(t.pop("model", "tree_ensemble"))
            if t:
                raise ConfigError(f"unknown temporal keys {sorted(t)}")
            if not gaps or min(gaps) < 1:
                raise ConfigError("temporal gaps must be positive integers")
            if set(feats) - {"ER", "tfidf"}:
                raise ConfigError(f"temporal features must be ER/tfidf, got {feats}")
            plan.temporal = {"gaps": gaps, "features": feats, "model": model}
        return plan

    def to_dict(self) -> dict:
        return {"tasks": self.tasks, "fractions": list(self.fractions), "cv_folds": self.cv_folds,
                "tfidf": self.tfidf, "temporal": self.temporal}


@dataclass
class PipelineConfig:
    output: Path
    dataset: Path | None = None
    posts: Path | None = None
    cohort: CohortSpec = field(default_factory=CohortSpec)
    labeler: str = "lexicon"
    lexicon: Path | None = None
    labels: Path | None = None
    window: WindowConfig = WindowConfig()
    model_kinds: list[str] = field(default_factory=lambda: ["tree_ensemble", "logistic"])
    hyperparams: dict[str, dict] = field(default_factory=dict)
    eval: EvalPlan = field(default_factory=EvalPlan)
    disorder_terms: Path | None = None
    drug_terms: Path | None = None
    seed: int = 0
    jobs: int = 1

    @classmethod
    def from_dict(cls, d: dict, base_dir=".", seed: int | None = None,
                  jobs: int | None = None) -> "PipelineConfig":
        """Validate a config mapping; relative paths resolve against ``base_dir``."""
        base = Path(base_dir)
        d = json.loads(json.dumps(d))
        try:
            data = d.pop("data", {})
            emo = d.pop("emotion", {})
            win = d.pop("window", {})
            mods = d.pop("models", {})
            ev = d.pop("eval", {})
            tfidf = d.pop("tfidf", {})
            cfg = cls(
                output=_resolve(base, d.pop("output", "out")),
                seed=int(d.pop("seed", 0) if seed is None else seed),
                jobs=int(d.pop("jobs", 1) if jobs is None else jobs),
            )
            d.pop("seed", None)
            d.pop("jobs", None)
            if d:
                raise ConfigError(f"unknown top-level keys {sorted(d)}")

            cfg.dataset = _resolve(base, data.pop("dataset", None))
            cfg.posts = _resolve(base, data.pop("posts", None))
            cohort = data.pop("cohort", None)
            if data:
                raise ConfigError(f"unknown data keys {sorted(data)}")
            if (cfg.dataset is None) == (cfg.posts is None):
                raise ConfigError("data needs exactly one of 'dataset' (built cohort dir) or 'posts'")
            if isinstance(cohort, str):
                cohort = json.loads(_resolve(base, cohort).read_text(encoding="utf-8"))
            cfg.cohort = CohortSpec.from_dict(cohort or {})

            cfg.labeler = emo.pop("labeler", "lexicon")
            cfg.lexicon = _resolve(base, emo.pop("lexicon", None))
            cfg.labels = _resolve(base, emo.pop("labels", None))
            if emo:
                raise ConfigError(f"unknown emotion keys {sorted(emo)}")
            if cfg.labeler not in ("lexicon", "precomputed"):
                raise ConfigError(f"unknown labeler {cfg.labeler!r}")
            if cfg.labeler == "precomputed" and cfg.labels is None:
                raise ConfigError("precomputed labeler needs emotion.labels")

            cfg.window = WindowConfig(int(win.pop("window_seconds", 1800)),
                                      int(win.pop("step_seconds", 1800)))
            if win:
                raise ConfigError(f"unknown window keys {sorted(win)}")

            cfg.model_kinds = [canonical_kind(k) for k in mods.pop("kinds", ["rf", "logreg"])]
            hp = mods.pop("hyperparams", {})
            cfg.hyperparams = {canonical_kind(k): dict(v) for k, v in hp.items()}
            if mods:
                raise ConfigError(f"unknown models keys {sorted(mods)}")
            if not cfg.model_kinds:
                raise ConfigError("models.kinds is empty")
            for kind, params in cfg.hyperparams.items():
                KINDS[kind](seed=0, **params)  # rejects unknown hyperparameters

            cfg.eval = EvalPlan.from_dict(ev)
            cfg.disorder_terms = _resolve(base, tfidf.pop("disorder_terms", None))
            cfg.drug_terms = _resolve(base, tfidf.pop("drug_terms", None))
            if tfidf:
                raise ConfigError(f"unknown tfidf keys {sorted(tfidf)}")
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError, OSError) as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        for p in (cfg.dataset, cfg.posts, cfg.lexicon, cfg.labels, cfg.disorder_terms, cfg.drug_terms):
            if p is not None and not p.exists():
                raise ConfigError(f"path does not exist: {p}")
        return cfg

    @classmethod
    def load(cls, path, seed: int | None = None, jobs: int | None = None) -> "PipelineConfig":
        p = Path(path)
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        return cls.from_dict(data, p.parent, seed, jobs)

    def tfidf_config(self) -> TfidfConfig:
        return TfidfConfig(disorder_terms=read_term_list(self.disorder_terms, "disorder_terms.txt"),
                           drug_terms=read_term_list(self.drug_terms, "drug_terms.txt"))

    def hp(self, kind: str) -> dict:
        return self.hyperparams.get(kind, {})


# --------------------------------------------------------------------------
# stage runner


class StageRunner:
    def __init__(self, root: Path):
        self.root = root
        self.hits: dict[str, bool] = {}

    def run(self, name: str, config: dict, inputs: dict[str, str], body) -> tuple[Path, dict]:
        """Run ``body(out_dir)`` unless a completed stage with the same key exists."""
        key = config_key({"stage": name, "config": config, "inputs": inputs, "version": __version__})
        out = self.root / "stages" / f"{name}-{key}"
        marker = out / "stage.json"
        if marker.exists():
            meta = json.loads(marker.read_text(encoding="utf-8"))
            if meta.get("key") == key and dir_hashes(out) == meta.get("outputs"):
                log.info("stage %s: cached (%s)", name, out.name)
                self.hits[name] = True
                return out, meta["outputs"]
        if out.exists():
            shutil.rmtree(out)
        out.mkdir(parents=True)
        log.info("stage %s: running -> %s", name, out.name)
        try:
            body(out)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, f"{type(exc).__name__}: {exc}") from exc
        outputs = dir_hashes(out)
        marker.write_text(json.dumps({"stage": name, "key": key, "config": config,
                                      "inputs": inputs, "outputs": outputs},
                                     indent=1, sort_keys=True) + "\n", encoding="utf-8")
        self.hits[name] = False
        return out, outputs


def _digest(hashes: dict[str, str]) -> str:
    return config_key(hashes)


# --------------------------------------------------------------------------
# stage bodies


def stage_corpus(cfg: PipelineConfig, out: Path) -> None:
    spec = CohortSpec.from_dict({**cfg.cohort.to_dict(), "seed": derive_seed(cfg.seed, "corpus")})
    reader = ingest_posts(cfg.posts, spec.fields)
    dataset = build_cohort(group_timelines(reader), spec)
    dataset.drops["malformed_lines"] = reader.n_malformed
    dataset.save(out)


def stage_emotion(cfg: PipelineConfig, dataset_dir: Path, out: Path) -> None:
    dataset = CohortDataset.load(dataset_dir)
    if cfg.labeler == "lexicon":
        labeler = LexiconLabeler(load_lexicon(cfg.lexicon))
    else:
        labeler = load_precomputed_labels(cfg.labels)
    sentences, posts = label_dataset(dataset, labeler, cfg.jobs)
    write_jsonl(out / SENTENCE_LABELS, sentences)
    write_jsonl(out / POST_EMOTIONS, posts)
    shutil.copyfile(dataset_dir / "manifest.jsonl", out / "manifest.jsonl")


def build_store(emotion_dir: Path, config: WindowConfig) -> FingerprintStore:
    from .corpus import read_jsonl
    manifest = list(read_jsonl(emotion_dir / "manifest.jsonl"))
    emotions = read_post_emotions(emotion_dir / POST_EMOTIONS)
    timelines = [emotions.get(r["user_id"], ([], [])) for r in manifest]
    fps = batch_fingerprints(timelines, config)
    return FingerprintStore([r["user_id"] for r in manifest], [r["label"] for r in manifest],
                            [int(r["year_bucket"]) for r in manifest],
                            np.stack([flatten(fp) for fp in fps]) if fps else np.zeros((0, 289)),
                            config, [fp.n_windows for fp in fps])


def analyze_store(store: FingerprintStore, out: Path) -> dict:
    """Per-class mean matrices (17x17 and 17x16) plus control-minus-disorder differences."""
    out.mkdir(parents=True, exist_ok=True)
    mats = store.matrices()
    means = {}
    for label in LABELS:
        rows = [i for i, lab in enumerate(store.labels) if lab == label]
        if not rows:
            continue
        m = cohort_mean_matrix(mats[rows])
        means[label] = m
        emit_heatmap(m, out / f"mean_{label}", title=f"{label}: mean transition matrix")
        emit_heatmap(drop_noact_column(m), out / f"mean_{label}_no_noact",
                     title=f"{label}: mean transition matrix without no-act")
    summary = {"classes": {k: {"n_users": int(sum(1 for x in store.labels if x == k))}
                           for k in means}}
    if "Control" in means:
        for d in DISORDERS:
            if d in means:
                diff = drop_noact_column(means["Control"]) - drop_noact_column(means[d])
                emit_heatmap(diff, out / f"diff_Control_minus_{d}",
                             title=f"Control minus {d}", diverging=True)
                summary["classes"][d]["max_abs_diff_vs_control"] = float(np.abs(diff).max())
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n",
                                      encoding="utf-8")
    return summary


class TfidfModel:
    """Fits the vocabulary on the training users' documents only, then a classifier."""

    def __init__(self, docs: list[str], kind: str, hyperparams: dict, config: TfidfConfig,
                 seed: int, jobs: int = 1):
        self.docs, self.kind, self.hp, self.config = docs, kind, hyperparams, config
        self.seed, self.jobs = seed, jobs

    def fit(self, idx) -> "TfidfModel":
        idx = np.asarray(idx).ravel()
        self.vectorizer = TfidfVectorizer(self.config).fit([self.docs[i] for i in idx])
        return self

    def fit_model(self, idx, y) -> "TfidfModel":
        self.fit(idx)
        X = self.vectorizer.transform([self.docs[i] for i in np.asarray(idx).ravel()])
        self.model = train(self.kind, X, y, self.seed, self.hp, "tfidf", self.jobs)
        return self

    def predict_proba(self, idx) -> np.ndarray:
        X = self.vectorizer.transform([self.docs[i] for i in np.asarray(idx).ravel()])
        return self.model.predict_proba(X)


def user_documents(dataset: CohortDataset) -> dict[str, str]:
    return {u.user_id: "\n".join(p.body for p in u.posts) for u in dataset.users}


def evaluate_task(task: str, store: FingerprintStore, docs: dict[str, str] | None,
                  cfg: PipelineConfig, out: Path) -> tuple[dict, list[dict]]:
    sub, y = store.task(task)
    X = sub.features
    ids = sub.user_ids
    plan = make_splits(dict(zip(ids, sub.labels)), cfg.eval.fractions,
                       derive_seed(cfg.seed, "split", task))
    split = np.array([plan.assignments[u] for u in ids])
    tr, va, te = (np.flatnonzero(split == s) for s in ("train", "val", "test"))
    doc_list = [docs[u] for u in ids] if docs is not None else None
    tcfg = cfg.tfidf_config() if docs is not None else None
    res = {"n_users": len(ids), "split_sizes": {"train": int(tr.size), "val": int(va.size),
                                                "test": int(te.size)},
           "held_out": {}, "cv": {}, "temporal": {}}
    runs = []
    feature_kinds = ["ER"] + (["tfidf"] if docs is not None else [])
    for fk in feature_kinds:
        res["held_out"][fk] = {}
        for kind in cfg.model_kinds:
            seed = derive_seed(cfg.seed, "model", task, fk, kind)
            if fk == "ER":
                model = train(kind, X[tr], y[tr], seed, cfg.hp(kind), "ER", cfg.jobs)
                model.save(out / "models" / f"{task}-{fk}-{kind}.json")
                scores = {"val": model.predict_proba(X[va]) if va.size else None,
                          "test": model.predict_proba(X[te])}
            else:
                model = TfidfModel(doc_list, kind, cfg.hp(kind), tcfg, seed, cfg.jobs).fit_model(tr, y[tr])
                scores = {"val": model.predict_proba(va) if va.size else None,
                          "test": model.predict_proba(te)}
            entry = {}
            for s_name, idx in (("val", va), ("test", te)):
                if scores[s_name] is None:
                    continue
                entry[s_name] = compute_metrics(y[idx], predict_labels(scores[s_name])).to_dict()
            t_y = y[te]
            entry["fpr_at_full_tpr"] = (fpr_at_full_tpr(t_y, scores["test"])
                                        if 0 < t_y.sum() < t_y.size else None)
            res["held_out"][fk][kind] = entry
            runs.append({"task": task, "feature_kind": fk, "model": kind, "seed": seed,
                         "split": "test", "metrics": entry["test"],
                         "fpr_at_full_tpr": entry["fpr_at_full_tpr"]})

    if cfg.eval.cv_folds:
        for fk in feature_kinds:
            res["cv"][fk] = {}
            for kind in cfg.model_kinds:
                cv_seed = derive_seed(cfg.seed, "cv", task, fk, kind)
                if fk == "ER":
                    def trainer(Xt, yt, s, kind=kind):
                        return train(kind, Xt, yt, s, cfg.hp(kind), "ER", cfg.jobs)
                    cv = cross_validate(X, y, trainer, cfg.eval.cv_folds, cv_seed)
                else:
                    def trainer(It, yt, s, kind=kind):
                        return TfidfModel(doc_list, kind, cfg.hp(kind), tcfg, s, cfg.jobs).fit_model(It, yt)
                    cv = cross_validate(np.arange(len(ids)).reshape(-1, 1), y, trainer,
                                        cfg.eval.cv_folds, cv_seed)
                res["cv"][fk][kind] = cv.to_dict()

    if cfg.eval.temporal:
        t = cfg.eval.temporal
        kind = t["model"]
        years = np.array(sub.years)
        series = {}
        for fk in t["features"]:
            if fk == "tfidf" and docs is None:
                continue
            if fk == "ER":
                featurize = er_featurizer(X)
            else:
                def featurize(a, b):
                    vec = TfidfVectorizer(tcfg).fit([doc_list[i] for i in a])
                    return (vec.transform([doc_list[i] for i in a]),
                            vec.transform([doc_list[i] for i in b]))

            def trainer(Xt, yt, s, kind=kind, fk=fk):
                return train(kind, Xt, yt, s, cfg.hp(kind), fk, cfg.jobs)
            result = temporal_harness(y, years, featurize, trainer, t["gaps"],
                                      derive_seed(cfg.seed, "temporal", task, fk), ids)
            res["temporal"][fk] = result.to_dict()
            if result.gaps:
                series[fk] = result.table()
        if series:
            emit_gap_curve(series, out / "plots" / f"gap_curve_{task}",
                           title=f"{task} vs Control: accuracy by year gap")
    return res, runs


def stage_eval(cfg: PipelineConfig, store: FingerprintStore, dataset: CohortDataset | None,
               out: Path) -> dict:
    docs = user_documents(dataset) if dataset is not None else None
    metrics = {"seed": cfg.seed, "version": __version__, "models": cfg.model_kinds,
               "eval": cfg.eval.to_dict(), "tasks": {}, "runs": []}
    present = set(store.labels)
    for task in cfg.eval.tasks:
        if task not in present or "Control" not in present:
            raise StageError("eval", f"task {task} needs both Control and {task} users")
        res, runs = evaluate_task(task, store, docs, cfg, out)
        metrics["tasks"][task] = res
        metrics["runs"].extend(runs)
    (out / "metrics.json").write_text(json.dumps(metrics, indent=1, sort_keys=True) + "\n",
                                      encoding="utf-8")
    return metrics


# --------------------------------------------------------------------------
# orchestration


@dataclass
class PipelineResult:
    output: Path
    metrics: dict
    manifest: dict
    cache_hits: dict[str, bool]


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    root = cfg.output
    root.mkdir(parents=True, exist_ok=True)
    runner = StageRunner(root)

    if cfg.dataset is not None:
        dataset_dir = cfg.dataset
        corpus_hashes = {k: v for k, v in dir_hashes(dataset_dir).items()
                         if k in ("posts.jsonl", "manifest.jsonl", "drops.json")}
        if not {"posts.jsonl", "manifest.jsonl"} <= set(corpus_hashes):
            raise StageError("corpus", f"{dataset_dir} lacks posts.jsonl/manifest.jsonl")
    else:
        dataset_dir, corpus_hashes = runner.run(
            "corpus", {"cohort": cfg.cohort.to_dict(), "seed": cfg.seed},
            {"posts": file_sha256(cfg.posts)}, lambda out: stage_corpus(cfg, out))

    emo_cfg = {"labeler": cfg.labeler}
    emo_inputs = {"corpus": _digest(corpus_hashes)}
    if cfg.labeler == "lexicon":
        emo_inputs["lexicon"] = file_sha256(cfg.lexicon) if cfg.lexicon else "default"
    else:
        emo_inputs["labels"] = file_sha256(cfg.labels)
    emotion_dir, emotion_hashes = runner.run(
        "emotion", emo_cfg, emo_inputs, lambda out: stage_emotion(cfg, dataset_dir, out))

    fp_cfg = {"window_seconds": cfg.window.window_seconds, "step_seconds": cfg.window.step_seconds}
    fp_dir, fp_hashes = runner.run(
        "fingerprint", fp_cfg, {"emotion": _digest(emotion_hashes)},
        lambda out: build_store(emotion_dir, cfg.window).save(out))
    store = FingerprintStore.load(fp_dir)

    an_dir, an_hashes = runner.run("analysis", {}, {"fingerprint": _digest(fp_hashes)},
                                   lambda out: analyze_store(store, out))

    eval_cfg = {"models": cfg.model_kinds, "hyperparams": cfg.hyperparams,
                "eval": cfg.eval.to_dict(), "seed": cfg.seed}
    eval_inputs = {"fingerprint": _digest(fp_hashes)}
    if cfg.eval.tfidf:
        eval_inputs["corpus"] = _digest(corpus_hashes)
        eval_cfg["tfidf_terms"] = config_key(sorted(cfg.tfidf_config().excluded))

    def eval_body(out):
        dataset = CohortDataset.load(dataset_dir) if cfg.eval.tfidf else None
        stage_eval(cfg, store, dataset, out)
    eval_dir, eval_hashes = runner.run("eval", eval_cfg, eval_inputs, eval_body)

    for name in ("metrics.json",):
        shutil.copyfile(eval_dir / name, root / name)
    for name in ("fingerprints.csv", "fingerprints.json"):
        shutil.copyfile(fp_dir / name, root / name)
    manifest = {"artifacts": {}}
    for stage, d, hashes in (("emotion", emotion_dir, emotion_hashes),
                             ("fingerprint", fp_dir, fp_hashes),
                             ("analysis", an_dir, an_hashes), ("eval", eval_dir, eval_hashes)):
        for rel, h in hashes.items():
            manifest["artifacts"][f"{d.relative_to(root).as_posix()}/{rel}"] = h
    if cfg.dataset is None:
        for rel, h in corpus_hashes.items():
            manifest["artifacts"][f"{dataset_dir.relative_to(root).as_posix()}/{rel}"] = h
    for name in ("metrics.json", "fingerprints.csv", "fingerprints.json"):
        manifest["artifacts"][name] = file_sha256(root / name)
    manifest["artifacts"] = dict(sorted(manifest["artifacts"].items()))
    (root / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n",
                                        encoding="utf-8")
    metrics = json.loads((root / "metrics.json").read_text(encoding="utf-8"))
    return PipelineResult(root, metrics, manifest, runner.hits)
