"""Command-line entry point: ``emotrans <group> <command> [options]``.

Exit codes: 0 success, 1 invalid arguments or configuration, 2 failure while running.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .corpus import CohortDataset, CohortSpec, CorpusError, build_cohort, group_timelines, ingest_posts, write_jsonl
from .emotion import (
    POST_EMOTIONS,
    SENTENCE_LABELS,
    EmotionError,
    LexiconLabeler,
    label_dataset,
    load_lexicon,
    load_precomputed_labels,
)
from .evaluation import EvalError, StatsError, fpr_at_full_tpr, welch_ttest
from .fingerprint import FingerprintError, FingerprintStore, WindowConfig
from .models import ModelError, TrainedModel, TrainingError, VocabularyError, train
from .pipeline import (
    ConfigError,
    EvalPlan,
    PipelineConfig,
    StageError,
    analyze_store,
    build_store,
    evaluate_task,
    run_pipeline,
)
from .plots import PlotError
from .synth import GeneratorSpec, SynthError, build_synthetic_cohort

log = logging.getLogger("emotrans")

VALIDATION_ERRORS = (ConfigError, SynthError, ModelError, EvalError, StatsError, EmotionError,
                     FingerprintError, PlotError, ValueError)
RUNTIME_ERRORS = (StageError, CorpusError, TrainingError, VocabularyError, OSError, RuntimeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _json_arg(text: str | None) -> dict:
    if not text:
        return {}
    p = Path(text)
    raw = p.read_text(encoding="utf-8") if p.exists() else text
    try:
        value = json.loads(raw)
    except ValueError as exc:
        raise UsageError(f"not JSON or a JSON file: {text}") from exc
    if not isinstance(value, dict):
        raise UsageError("hyperparameters must be a JSON object")
    return value


def _floats(text: str) -> list[float]:
    p = Path(text)
    raw = p.read_text(encoding="utf-8") if p.exists() else text
    return [float(x) for x in raw.replace(",", " ").split()]


def _write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# commands


def cmd_corpus_build(args) -> int:
    spec = CohortSpec.load(args.spec) if args.spec else CohortSpec()
    if args.seed is not None:
        spec.seed = args.seed
    reader = ingest_posts(args.posts, spec.fields)
    dataset = build_cohort(group_timelines(reader), spec)
    dataset.drops["malformed_lines"] = reader.n_malformed
    dataset.save(args.out)
    print(json.dumps({"class_sizes": dataset.class_sizes(), "drops": dataset.drops["rules"]},
                     sort_keys=True))
    return 0


def cmd_emotion_label(args) -> int:
    dataset = CohortDataset.load(args.dataset)
    if args.labeler == "lexicon":
        labeler = LexiconLabeler(load_lexicon(args.lexicon))
    else:
        if not args.labels:
            raise UsageError("--labeler precomputed needs --labels")
        labeler = load_precomputed_labels(args.labels)
    sentences, posts = label_dataset(dataset, labeler, args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / SENTENCE_LABELS, sentences)
    write_jsonl(out / POST_EMOTIONS, posts)
    (out / "manifest.jsonl").write_bytes((Path(args.dataset) / "manifest.jsonl").read_bytes())
    print(f"labelled {len(posts)} posts, {len(sentences)} sentences -> {out}")
    return 0


def cmd_fingerprint_build(args) -> int:
    store = build_store(Path(args.labels), WindowConfig(args.window, args.step))
    store.save(args.out)
    print(f"{len(store)} fingerprints -> {Path(args.out) / 'fingerprints.csv'}")
    return 0


def cmd_fingerprint_analyze(args) -> int:
    store = FingerprintStore.load(args.store or args.out)
    summary = analyze_store(store, Path(args.out))
    print(json.dumps(summary, sort_keys=True))
    return 0


def _task_data(store: FingerprintStore, task: str | None):
    classes = sorted(set(store.labels))
    if task is None:
        if len(classes) != 2 or "Control" not in classes:
            raise UsageError(f"store has classes {classes}; pick one with --task")
        task = next(c for c in classes if c != "Control")
    return store.task(task)


def cmd_model_train(args) -> int:
    store = FingerprintStore.load(args.features)
    sub, y = _task_data(store, args.task)
    model = train(args.kind, sub.features, y, args.seed or 0, _json_arg(args.hyperparams),
                  "ER", args.jobs)
    model.save(args.out)
    print(f"trained {model.kind} on {len(sub)} users -> {args.out}")
    return 0


def cmd_model_predict(args) -> int:
    model = TrainedModel.load(args.model)
    store = FingerprintStore.load(args.features)
    y = None
    if args.task:
        store, y = store.task(args.task)
    proba = model.predict_proba(store.features)
    rows = [{"user_id": u, "label": lab, "score": float(p)}
            for u, lab, p in zip(store.user_ids, store.labels, proba)]
    if y is not None:
        for r, t in zip(rows, y.tolist()):
            r["y_true"] = int(t)
    if args.out:
        write_jsonl(args.out, rows)
    else:
        for r in rows:
            print(json.dumps(r, sort_keys=True))
    return 0


def _eval_config(args, temporal=None) -> PipelineConfig:
    cfg = PipelineConfig(output=Path(args.out), seed=args.seed or 0, jobs=args.jobs)
    cfg.model_kinds = list(args.kinds)
    cfg.eval = EvalPlan.from_dict({"tasks": args.task, "cv_folds": getattr(args, "cv", 0),
                                   "tfidf": bool(args.dataset), "temporal": temporal})
    return cfg


def _run_eval(args, cfg: PipelineConfig) -> int:
    from .pipeline import stage_eval
    store = FingerprintStore.load(args.features)
    dataset = CohortDataset.load(args.dataset) if args.dataset else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics = stage_eval(cfg, store, dataset, out)
    for r in metrics["runs"]:
        m = r["metrics"]
        print(f"{r['task']:4s} {r['feature_kind']:6s} {r['model']:14s} "
              f"acc={m['accuracy']:.3f} f1={m['f1']:.3f} fpr@tpr1={r['fpr_at_full_tpr']}")
    return 0


def cmd_eval_run(args) -> int:
    return _run_eval(args, _eval_config(args))


def cmd_eval_temporal(args) -> int:
    feats = args.feature_kinds or (["ER", "tfidf"] if args.dataset else ["ER"])
    cfg = _eval_config(args, {"gaps": args.gaps, "features": feats, "model": args.kinds[0]})
    cfg.eval.cv_folds = 0
    rc = _run_eval(args, cfg)
    metrics = json.loads((Path(args.out) / "metrics.json").read_text(encoding="utf-8"))
    for task, res in metrics["tasks"].items():
        for fk, t in res["temporal"].items():
            for row in t["per_gap"]:
                print(f"{task} {fk} gap={row['gap']} mean={row['mean_acc']:.3f} "
                      f"stderr={row['stderr']:.3f} n={row['n_experiments']}")
    return rc


def cmd_eval_fpr(args) -> int:
    y, s = [], []
    with Path(args.scores).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            y.append(int(row[args.label_field]))
            s.append(float(row["score"]))
    print(json.dumps({"fpr_at_full_tpr": fpr_at_full_tpr(np.array(y), np.array(s))}))
    return 0


def cmd_eval_ttest(args) -> int:
    print(json.dumps(welch_ttest(_floats(args.a), _floats(args.b)).to_dict(), sort_keys=True))
    return 0


def cmd_synth_generate(args) -> int:
    spec = GeneratorSpec.load(args.spec) if args.spec else GeneratorSpec()
    if args.seed is not None:
        spec.seed = args.seed
    cohort = build_synthetic_cohort(spec)
    cohort.save(args.out)
    print(f"{len(cohort.dataset.users)} synthetic users -> {args.out}")
    return 0


def cmd_pipeline_run(args) -> int:
    if not args.config:
        raise UsageError("pipeline run needs --config")
    cfg = PipelineConfig.load(args.config, seed=args.seed, jobs=args.jobs if args.jobs_set else None)
    if args.out:
        cfg.output = Path(args.out)
    result = run_pipeline(cfg)
    hits = ", ".join(f"{k}={'cached' if v else 'ran'}" for k, v in result.cache_hits.items())
    print(f"pipeline finished: {result.output} ({hits})")
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress: bool) -> argparse.ArgumentParser:
        # flags accepted before and after the subcommand; the copy after it must
        # not overwrite values given before it
        d = {"default": argparse.SUPPRESS} if suppress else {}
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--config", help="pipeline config JSON", **d)
        g.add_argument("--seed", type=int, help="global seed", **d)
        g.add_argument("--jobs", type=int, help="worker count", **d)
        g.add_argument("-v", "--verbose", action="store_true", **d)
        return g

    common = global_flags(True)
    p = _Parser(prog="emotrans", parents=[global_flags(False)],
                description="Emotion-transition fingerprints for mental-health classification.")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def group(name, help_):
        g = groups.add_parser(name, help=help_)
        return g.add_subparsers(dest="command", required=True, parser_class=_Parser)

    corpus = group("corpus", "build a labelled cohort from posts")
    c = corpus.add_parser("build", parents=[common])
    c.add_argument("--posts", required=True)
    c.add_argument("--spec", help="cohort spec JSON")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_corpus_build)

    emotion = group("emotion", "label post emotions")
    c = emotion.add_parser("label", parents=[common])
    c.add_argument("--dataset", required=True)
    c.add_argument("--labeler", choices=["lexicon", "precomputed"], default="lexicon")
    c.add_argument("--lexicon", help="emotion,word CSV (default: bundled lexicon)")
    c.add_argument("--labels", help="precomputed sentence labels JSONL")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_emotion_label)

    fp = group("fingerprint", "transition fingerprints")
    c = fp.add_parser("build", parents=[common])
    c.add_argument("--labels", required=True, help="output dir of 'emotion label'")
    c.add_argument("--window", type=int, default=1800)
    c.add_argument("--step", type=int, default=1800)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_fingerprint_build)
    c = fp.add_parser("analyze", parents=[common])
    c.add_argument("--store", help="fingerprint dir or CSV (default: --out)")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_fingerprint_analyze)

    model = group("model", "train or apply a classifier")
    c = model.add_parser("train", parents=[common])
    c.add_argument("--features", required=True, help="fingerprints.csv or its directory")
    c.add_argument("--kind", default="rf")
    c.add_argument("--task", help="disorder class vs Control (needed for 4-class stores)")
    c.add_argument("--hyperparams", help="JSON object or file")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_model_train)
    c = model.add_parser("predict", parents=[common])
    c.add_argument("--model", required=True)
    c.add_argument("--features", required=True)
    c.add_argument("--task", help="keep this disorder and Control, adding a 0/1 y_true field")
    c.add_argument("--out")
    c.set_defaults(func=cmd_model_predict)

    ev = group("eval", "evaluation protocol")
    for name, func in (("run", cmd_eval_run), ("temporal", cmd_eval_temporal)):
        c = ev.add_parser(name, parents=[common])
        c.add_argument("--features", required=True)
        c.add_argument("--dataset", help="cohort dir; enables the tf-idf baseline")
        c.add_argument("--task", nargs="+", default=["BD", "MDD", "AD"])
        c.add_argument("--kinds", nargs="+", default=["rf", "logreg"] if name == "run" else ["rf"])
        c.add_argument("--out", required=True)
        if name == "run":
            c.add_argument("--cv", type=int, default=5, help="folds (0 = off)")
        else:
            c.add_argument("--gaps", type=int, nargs="+", default=list(range(1, 8)))
            c.add_argument("--feature-kinds", nargs="+", choices=["ER", "tfidf"])
        c.set_defaults(func=func)
    c = ev.add_parser("fpr", parents=[common])
    c.add_argument("--scores", required=True, help="JSONL with 'score' and a 0/1 label field")
    c.add_argument("--label-field", default="y_true")
    c.set_defaults(func=cmd_eval_fpr)
    c = ev.add_parser("ttest", parents=[common])
    c.add_argument("--a", required=True, help="numbers (comma/space separated) or a file")
    c.add_argument("--b", required=True)
    c.set_defaults(func=cmd_eval_ttest)

    synth = group("synth", "synthetic cohorts")
    c = synth.add_parser("generate", parents=[common])
    c.add_argument("--spec", help="generator spec JSON (default: built-in)")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_synth_generate)

    pipe = group("pipeline", "end-to-end run")
    c = pipe.add_parser("run", parents=[common])
    c.add_argument("--out", help="override the config's output dir")
    c.set_defaults(func=cmd_pipeline_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.jobs_set = args.jobs is not None
    if args.jobs is None:
        args.jobs = 1
    if args.jobs < 1:
        print("emotrans: error: --jobs must be >= 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except StageError as exc:
        print(f"emotrans: {exc}", file=sys.stderr)
        return 2
    except (UsageError, *VALIDATION_ERRORS) as exc:
        print(f"emotrans: error: {exc}", file=sys.stderr)
        return 1
    except RUNTIME_ERRORS as exc:
        print(f"emotrans: runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
