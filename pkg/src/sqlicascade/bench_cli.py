"""Command-line experiment runner: repeated train/test evaluation, latency
measurement, FE rankings, cascade evaluation, and effective-latency estimates.

Accuracy numbers are deterministic (per-run seeds derive from the run index);
latency numbers are hardware-relative, so every report carries machine
metadata.  Reports are written as schema-versioned JSON plus markdown tables.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import cascade as cas
from . import ensemble as ens
from . import linear_models as lm
from . import metrics as mx
from . import synthetic
from .corpus import LabeledCorpus, SplitSpec, class_counts, load_csv, save_csv, stratified_split
from .features import FeaturePipeline, family_pipeline

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_PARTIAL = 2


def reference_measurements_path() -> Path:
    """Bundled measurement set (published per-method F1/latency rows) for FE demos."""
    return Path(str(resources.files("sqlicascade").joinpath("data/reference_measurements.json")))


def report_schema_path() -> Path:
    return Path(str(resources.files("sqlicascade").joinpath("schemas/report.schema.json")))


# -- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class LatencySpec:
    """How to measure per-sample latency: warmup passes, then timed batches."""

    warmup: int = 1
    repeats: int = 5
    batch_size: int = 1000

    def __post_init__(self) -> None:
        if self.warmup < 0 or self.repeats < 1 or self.batch_size < 1:
            raise ValueError("latency spec needs warmup >= 0, repeats >= 1, batch_size >= 1")


@dataclass
class ExperimentConfig:
    dataset: dict[str, Any] | None = None  # {"path", "text_column", "label_column", ...}
    synthetic: dict[str, Any] | None = None  # {"n_positive", "n_negative", "seed"}
    test_fraction: float = 0.2
    stratified: bool = True
    repetitions: int = 10
    roster: list[dict[str, Any]] = field(default_factory=list)
    fe_alpha: tuple[float, ...] = (1.0, 0.98)
    output_dir: str = "bench-out"
    latency: LatencySpec = field(default_factory=LatencySpec)
    train: dict[str, Any] = field(default_factory=dict)
    external_measurements: str | None = None

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.roster:
            self.roster = default_roster()

    @staticmethod
    def from_file(path: str | Path, overrides: dict[str, Any] | None = None) -> "ExperimentConfig":
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib  # type: ignore[import-not-found]
            except ModuleNotFoundError:
                import tomli as tomllib  # type: ignore[no-redef]
            raw = tomllib.loads(path.read_text(encoding="utf-8"))
        else:
            raw = json.loads(path.read_text(encoding="utf-8"))
        raw.update(overrides or {})
        latency = LatencySpec(**raw.pop("latency", {}))
        fe_alpha = tuple(raw.pop("fe_alpha", (1.0, 0.98)))
        return ExperimentConfig(latency=latency, fe_alpha=fe_alpha, **raw)


def default_roster() -> list[dict[str, Any]]:
    """The stock method roster: every supported classifier kind on idf-weighted
    char monograms, the three voting ensembles, and the cascade."""
    roster: list[dict[str, Any]] = [
        {"name": "PassiveAggressive", "kind": lm.PA, "family": "tfidf-char1"},
        {"name": "Perceptron", "kind": lm.PERCEPTRON, "family": "tfidf-char1"},
        {"name": "SGD-hinge", "kind": lm.SGD_HINGE, "family": "tfidf-char1"},
        {"name": "SGD-log", "kind": lm.SGD_LOG, "family": "tfidf-char1"},
        {"name": "MultinomialNB", "kind": lm.MULTINOMIAL_NB, "family": "tfidf-char1"},
        {"name": "NearestCentroid", "kind": lm.NEAREST_CENTROID, "family": "tfidf-char1"},
        {"name": "Ensemble 1", "ensemble": {"strategy": ens.BY_CLASSIFIER}},
        {"name": "Ensemble 2", "ensemble": {"strategy": ens.BY_FEATURE}},
        {"name": "Ensemble 3", "ensemble": {"strategy": ens.CONCAT}},
        {"name": "Proposed", "cascade": {}},
    ]
    return roster


# The hyperparameters behind the published per-method scores are unreported;
# ten epochs is where the from-scratch trainers plateau on this task.
BENCH_EPOCHS = 10


def _train_config(overrides: dict[str, Any], run_seed: int) -> lm.TrainConfig:
    kwargs: dict[str, Any] = {"epochs": BENCH_EPOCHS, "shuffle_seed": run_seed}
    kwargs.update(overrides)
    if "class_weights" in kwargs:
        kwargs["class_weights"] = tuple(kwargs["class_weights"])
    return lm.TrainConfig(**kwargs)


def load_experiment_corpus(config: ExperimentConfig) -> LabeledCorpus:
    if config.dataset and config.synthetic:
        raise ValueError("configure either a dataset file or a synthetic corpus, not both")
    if config.dataset:
        ds = dict(config.dataset)
        return load_csv(ds.pop("path"), **ds)
    syn = dict(config.synthetic or {})
    return synthetic.make_corpus(
        n_positive=int(syn.get("n_positive", synthetic.DEFAULT_POSITIVES)),
        n_negative=int(syn.get("n_negative", synthetic.DEFAULT_NEGATIVES)),
        seed=int(syn.get("seed", 0)),
    )


# -- latency measurement -------------------------------------------------------

BatchFn = Callable[[Sequence[str]], Any]


def _as_batch_fn(target: Any) -> BatchFn:
    if callable(target) and not hasattr(target, "classify_batch"):
        return target
    if hasattr(target, "classify_batch"):
        return target.classify_batch
    if hasattr(target, "score_batch"):
        return target.score_batch
    raise TypeError(f"cannot measure latency of {type(target).__name__}")


def measure_latency(target: Any, samples: Sequence[str],
                    spec: LatencySpec = LatencySpec()) -> mx.LatencyStats:
    """Per-sample wall-clock latency: batch time divided by batch size,
    after warmup passes, summarized over repeated batches."""
    if not samples:
        raise ValueError("need at least one sample to measure latency")
    fn = _as_batch_fn(target)
    batch = list(samples[: spec.batch_size])
    for _ in range(spec.warmup):
        fn(batch)
    per_sample: list[float] = []
    for _ in range(spec.repeats):
        t0 = time.perf_counter()
        fn(batch)
        per_sample.append((time.perf_counter() - t0) * 1000.0 / len(batch))
    return mx.summarize_latencies(per_sample)


# -- single-run method evaluation ----------------------------------------------

@dataclass
class FittedMethod:
    name: str
    predict_batch: BatchFn  # payloads -> labels
    train_seconds: float
    n_train: int
    extras: dict[str, Any] = field(default_factory=dict)


def _fit_single(spec: dict[str, Any], train: LabeledCorpus, run_seed: int,
                base_train: dict[str, Any]) -> FittedMethod:
    overrides = {**base_train, **spec.get("train", {})}
    config = _train_config(overrides, run_seed)
    threshold = float(spec.get("threshold", 0.0))
    pipe = family_pipeline(spec.get("family", "tfidf-char1"))
    t0 = time.perf_counter()
    matrix = pipe.fit_transform(train)
    model = lm.fit(spec["kind"], matrix, train.labels, config)
    train_seconds = time.perf_counter() - t0

    def predict_batch(payloads: Sequence[str]) -> list[int]:
        probe = LabeledCorpus(tuple(payloads), (0,) * len(payloads), source_id="probe")
        return lm.predict_matrix(model, pipe.transform(probe), threshold).tolist()

    return FittedMethod(spec["name"], predict_batch, train_seconds, len(train))


def _fit_ensemble(spec: dict[str, Any], train: LabeledCorpus, run_seed: int,
                  base_train: dict[str, Any]) -> FittedMethod:
    config = _train_config({**base_train, **spec.get("train", {})}, run_seed)
    espec = ens.EnsembleSpec.from_dict(spec["ensemble"])
    t0 = time.perf_counter()
    model = ens.fit_ensemble(train, espec, config)
    train_seconds = time.perf_counter() - t0

    def predict_batch(payloads: Sequence[str]) -> list[int]:
        probe = LabeledCorpus(tuple(payloads), (0,) * len(payloads), source_id="probe")
        return model.predict_corpus(probe).tolist()

    return FittedMethod(spec["name"], predict_batch, train_seconds, len(train))


def _fit_cascade_method(spec: dict[str, Any], train: LabeledCorpus, run_seed: int,
                        base_train: dict[str, Any]) -> FittedMethod:
    c = spec.get("cascade", {})
    stage1_train = _train_config(
        {**base_train, "class_weights": (1.0, float(c.get("positive_weight", cas.DEFAULT_POSITIVE_WEIGHT))),
         **c.get("stage1_train", {})}, run_seed)
    stage2_train = _train_config({**base_train, **c.get("stage2_train", {})}, run_seed)
    config = cas.CascadeConfig(
        stage1_kind=c.get("stage1_kind", lm.PA),
        stage1_family=c.get("stage1_family", "tfidf-char1"),
        stage1_threshold=float(c.get("stage1_threshold", cas.DEFAULT_STAGE1_THRESHOLD)),
        stage1_train=stage1_train,
        stage2_train=stage2_train,
    )
    handle = cas.Stage2Handle(**c.get("stage2", {})) if c.get("stage2") else cas.Stage2Handle()
    t0 = time.perf_counter()
    model = cas.fit_cascade(train, config, handle)
    train_seconds = time.perf_counter() - t0

    def predict_batch(payloads: Sequence[str]) -> list[int]:
        return [t.final for t in model.classify_batch(payloads)]

    return FittedMethod(spec["name"], predict_batch, train_seconds, len(train),
                        extras={"cascade_model": model})


def fit_method(spec: dict[str, Any], train: LabeledCorpus, run_seed: int,
               base_train: dict[str, Any]) -> FittedMethod:
    if "kind" in spec:
        return _fit_single(spec, train, run_seed, base_train)
    if "ensemble" in spec:
        return _fit_ensemble(spec, train, run_seed, base_train)
    if "cascade" in spec:
        return _fit_cascade_method(spec, train, run_seed, base_train)
    raise ValueError(f"roster entry {spec.get('name')!r} needs 'kind', 'ensemble', or 'cascade'")


def _run_metrics(run: int, preds: Sequence[int], truth: Sequence[int],
                 train_seconds: float, n_train: int) -> dict[str, Any]:
    c = mx.confusion(preds, truth)
    m = mx.prf1(c)
    return {
        "run": run,
        "accuracy": m.accuracy, "precision": m.precision, "recall": m.recall,
        "f1": m.f1, "fallout": m.fallout,
        "tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn,
        "train_ms_per_sample": train_seconds * 1000.0 / max(1, n_train),
    }


def _mean_metrics(runs: list[dict[str, Any]]) -> dict[str, Any]:
    keys = ("accuracy", "precision", "recall", "f1", "fallout",
            "tp", "tn", "fp", "fn", "train_ms_per_sample")
    return {k: float(np.mean([r[k] for r in runs])) for k in keys}


# -- cascade estimation ----------------------------------------------------------

def estimate_cascade(fpr: float, recall: float, prior_attack: float,
                     t1_ms: float, t2_ms: float) -> dict[str, Any]:
    """Analytic effective-latency report from measured stage rates and times."""
    inputs = mx.LatencyModelInputs(fpr=fpr, recall=recall, prior_attack=prior_attack,
                                   t1_ms=t1_ms, t2_ms=t2_ms)
    rate = mx.effective_positive_rate(inputs)
    latency = mx.effective_latency(inputs)
    return {
        "inputs": {"fpr": fpr, "recall": recall, "prior_attack": prior_attack,
                   "t1_ms": t1_ms, "t2_ms": t2_ms},
        "stage2_trigger_rate": rate,
        "effective_latency_ms": latency,
        "speedup_vs_stage2": t2_ms / latency if latency > 0 else None,
    }


def _machine_info() -> dict[str, Any]:
    cpu = platform.processor() or ""
    try:
        with open("/proc/cpuinfo", "r", encoding="utf-8") as fh:
            for line in fh:
                if line.lower().startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return {
        "platform": platform.platform(),
        "python": platform.python_version(),
        "cpu": cpu,
        "cores": os.cpu_count(),
    }


# -- the experiment loop ---------------------------------------------------------

TABLE_COLUMNS = ["Method", "Accuracy", "Precision", "Recall", "F1",
                 "TP", "TN", "FP", "FN", "Training Time (ms)", "Inference Time (ms)"]


def _markdown_table(methods: list[dict[str, Any]]) -> str:
    lines = ["| " + " | ".join(TABLE_COLUMNS) + " |",
             "|" + "|".join(["---"] * len(TABLE_COLUMNS)) + "|"]
    for m in methods:
        if m["failed"] or not m.get("mean"):
            lines.append(f"| {m['name']} | failed |" + " |" * (len(TABLE_COLUMNS) - 2))
            continue
        mean = m["mean"]
        lat = m.get("latency")
        lines.append(
            "| {name} | {accuracy:.4f} | {precision:.4f} | {recall:.4f} | {f1:.4f} "
            "| {tp:.0f} | {tn:.0f} | {fp:.0f} | {fn:.0f} | {train:.4f} | {infer} |".format(
                name=m["name"], accuracy=mean["accuracy"], precision=mean["precision"],
                recall=mean["recall"], f1=mean["f1"], tp=mean["tp"], tn=mean["tn"],
                fp=mean["fp"], fn=mean["fn"], train=mean["train_ms_per_sample"],
                infer=f"{lat['mean_ms']:.4f}" if lat else "n/a",
            ))
    return "\n".join(lines) + "\n"


def run_experiment(config: ExperimentConfig) -> tuple[dict[str, Any], int]:
    """Run the full protocol and write report.json, tables/, fe_ranking.json.

    Returns (report, exit_code); exit code 2 means at least one roster method
    failed (its row is marked failed and the rest completed).
    """
    corpus = load_experiment_corpus(config)
    pos, neg = class_counts(corpus)
    out_dir = Path(config.output_dir)
    (out_dir / "tables").mkdir(parents=True, exist_ok=True)

    method_rows: list[dict[str, Any]] = []
    fitted_last: dict[str, FittedMethod] = {}
    test_last: LabeledCorpus | None = None

    for spec in config.roster:
        name = spec["name"]
        runs: list[dict[str, Any]] = []
        row: dict[str, Any] = {"name": name, "failed": False, "error": None}
        try:
            for run in range(config.repetitions):
                train, test = stratified_split(
                    corpus, SplitSpec(config.test_fraction, seed=run, stratified=config.stratified))
                fitted = fit_method(spec, train, run, config.train)
                preds = fitted.predict_batch(list(test.payloads))
                runs.append(_run_metrics(run, preds, list(test.labels),
                                         fitted.train_seconds, fitted.n_train))
                if run == config.repetitions - 1:
                    fitted_last[name] = fitted
                    test_last = test
            row["runs"] = runs
            row["mean"] = _mean_metrics(runs)
            log.info("method %s: mean F1 %.4f", name, row["mean"]["f1"])
        except Exception as exc:  # noqa: BLE001 - per-method isolation is the contract
            log.exception("method %s failed", name)
            row["failed"] = True
            row["error"] = f"{type(exc).__name__}: {exc}"
        method_rows.append(row)

    # Timing phase runs serialized, after all accuracy work, to avoid contention.
    if test_last is not None:
        samples = list(test_last.payloads)
        for row in method_rows:
            fitted = fitted_last.get(row["name"])
            if row["failed"] or fitted is None:
                row["latency"] = None
                continue
            row["latency"] = measure_latency(fitted.predict_batch, samples,
                                             config.latency)._asdict()
            model = fitted.extras.get("cascade_model")
            if model is not None:
                row["cascade"] = _cascade_block(model, test_last, config.latency)

    # FE rankings over the measured methods (plus any external measurement rows).
    measurements = []
    for row in method_rows:
        if not row["failed"] and row.get("latency"):
            measurements.append(mx.MethodMeasurement(
                name=row["name"], f1=row["mean"]["f1"],
                inference_ms=max(row["latency"]["mean_ms"], 1e-9)))
    if config.external_measurements:
        measurements.extend(mx.load_measurements(config.external_measurements))
    fe_rankings = []
    for alpha in config.fe_alpha:
        ranking = [m.name for m in mx.rank_by_fe(measurements, alpha)] if measurements else []
        fe_rankings.append({"alpha": alpha, "context": [m.name for m in measurements],
                            "ranking": ranking})

    report = {
        "schema_version": SCHEMA_VERSION,
        "machine": _machine_info(),
        "dataset": {"source": corpus.source_id, "size": len(corpus),
                    "positives": pos, "negatives": neg},
        "repetitions": config.repetitions,
        "methods": method_rows,
        "fe_rankings": fe_rankings,
    }

    (out_dir / "report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
    (out_dir / "tables" / "methods.md").write_text(_markdown_table(method_rows), encoding="utf-8")
    (out_dir / "fe_ranking.json").write_text(json.dumps(fe_rankings, indent=2), encoding="utf-8")

    failed = any(row["failed"] for row in method_rows)
    return report, (EXIT_PARTIAL if failed else EXIT_OK)


def _cascade_block(model: cas.CascadeModel, test: LabeledCorpus,
                   latency: LatencySpec) -> dict[str, Any]:
    """Stage-1 quality, measured trigger rate, per-stage times, and the
    analytic effective-latency estimate for a fitted cascade."""
    scores = model.stage1_scores(test)
    s1_preds = (scores >= model.stage1_threshold).astype(int)
    c1 = mx.confusion(s1_preds.tolist(), list(test.labels))
    m1 = mx.prf1(c1)

    samples = list(test.payloads)[: latency.batch_size]
    t1 = measure_latency(lambda ps: model.stage1_scores(
        LabeledCorpus(tuple(ps), (0,) * len(ps), source_id="probe")), samples, latency)
    t2 = measure_latency(model.stage2, samples, latency)
    model.measured_t1_ms = t1.mean_ms
    model.measured_t2_ms = t2.mean_ms

    traces = model.classify_batch(samples)
    return {
        "stage1": {"accuracy": m1.accuracy, "precision": m1.precision, "recall": m1.recall,
                   "f1": m1.f1, "fallout": m1.fallout,
                   "tp": c1.tp, "tn": c1.tn, "fp": c1.fp, "fn": c1.fn,
                   "train_ms_per_sample": 0.0},
        "trigger_rate": cas.trigger_rate(traces),
        "estimate": estimate_cascade(fpr=m1.fallout, recall=m1.recall, prior_attack=0.033,
                                     t1_ms=t1.mean_ms, t2_ms=t2.mean_ms),
    }


# -- CLI ------------------------------------------------------------------------

def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", help="CSV dataset path; omit to use the synthetic corpus")
    p.add_argument("--text-column", default="payload")
    p.add_argument("--label-column", default="label")
    p.add_argument("--positive-token", default="1")
    p.add_argument("--negative-token", default="0")
    p.add_argument("--synthetic-seed", type=int, default=0)
    p.add_argument("--synthetic-size", type=int, default=None,
                   help="total synthetic rows (class balance follows the default ratio)")


def _corpus_from_args(args: argparse.Namespace) -> LabeledCorpus:
    if args.dataset:
        return load_csv(args.dataset, text_column=args.text_column,
                        label_column=args.label_column,
                        positive_token=args.positive_token,
                        negative_token=args.negative_token)
    if args.synthetic_size:
        total = synthetic.DEFAULT_POSITIVES + synthetic.DEFAULT_NEGATIVES
        n_pos = round(args.synthetic_size * synthetic.DEFAULT_POSITIVES / total)
        return synthetic.make_corpus(n_pos, args.synthetic_size - n_pos, seed=args.synthetic_seed)
    return synthetic.make_corpus(seed=args.synthetic_seed)


def _cmd_train(args: argparse.Namespace) -> int:
    corpus = _corpus_from_args(args)
    train, test = stratified_split(corpus, SplitSpec(args.test_fraction, seed=args.seed))
    config = _train_config({"class_weights": (1.0, args.positive_weight)}, args.seed)
    pipe = family_pipeline(args.family)
    matrix = pipe.fit_transform(train)
    model = lm.fit(args.kind, matrix, train.labels, config)

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    pipe.save(out / "pipeline.json")
    lm.save_model(model, out / "model.json", threshold=args.threshold,
                  pipeline_id=pipe.pipeline_id())
    preds = lm.predict_matrix(model, pipe.transform(test), args.threshold)
    m = mx.prf1(mx.confusion(preds.tolist(), list(test.labels)))
    print(json.dumps({"saved_to": str(out), "holdout": m._asdict()}, indent=2))
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    corpus = _corpus_from_args(args)
    pipe = FeaturePipeline.load(Path(args.model_dir) / "pipeline.json")
    loaded = lm.load_model(Path(args.model_dir) / "model.json")
    preds = lm.predict_matrix(loaded.model, pipe.transform(corpus), loaded.threshold)
    c = mx.confusion(preds.tolist(), list(corpus.labels))
    m = mx.prf1(c)
    print(json.dumps({"counts": c.__dict__, "metrics": m._asdict()}, indent=2))
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    overrides: dict[str, Any] = {}
    if args.output:
        overrides["output_dir"] = args.output
    if args.repetitions:
        overrides["repetitions"] = args.repetitions
    if args.config:
        config = ExperimentConfig.from_file(args.config, overrides)
    else:
        config = ExperimentConfig(**overrides)
    report, code = run_experiment(config)
    n_failed = sum(1 for m in report["methods"] if m["failed"])
    print(f"report written to {config.output_dir} "
          f"({len(report['methods'])} methods, {n_failed} failed)")
    return code


def _cmd_cascade(args: argparse.Namespace) -> int:
    corpus = _corpus_from_args(args)
    train, test = stratified_split(corpus, SplitSpec(args.test_fraction, seed=args.seed))
    config = cas.CascadeConfig(
        stage1_threshold=args.threshold,
        stage1_train=_train_config({"class_weights": (1.0, args.positive_weight)}, args.seed),
        stage2_train=_train_config({}, args.seed),
    )
    model = cas.fit_cascade(train, config)
    block = _cascade_block(model, test, LatencySpec(warmup=1, repeats=3,
                                                    batch_size=min(len(test), 2000)))
    traces = model.classify_batch(list(test.payloads))
    c = mx.confusion([t.final for t in traces], list(test.labels))
    m = mx.prf1(c)
    print(json.dumps({"cascade": m._asdict(), "counts": c.__dict__, **block}, indent=2))
    return EXIT_OK


def _cmd_fe_rank(args: argparse.Namespace) -> int:
    path = args.measurements or reference_measurements_path()
    measurements = mx.load_measurements(path)
    out = []
    for alpha in args.alpha:
        ranked = mx.rank_by_fe(measurements, alpha)
        out.append({
            "alpha": alpha,
            "context": [m.name for m in measurements],
            "ranking": [{"name": m.name, "fe": mx.fe_score(m, alpha, measurements),
                         "f1": m.f1, "inference_ms": m.inference_ms} for m in ranked],
        })
    text = json.dumps(out, indent=2)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    print(text)
    return EXIT_OK


def _cmd_effective_latency(args: argparse.Namespace) -> int:
    out = []
    for prior in args.prior:
        out.append(estimate_cascade(fpr=args.fpr, recall=args.recall, prior_attack=prior,
                                    t1_ms=args.t1, t2_ms=args.t2))
    print(json.dumps(out if len(out) > 1 else out[0], indent=2))
    return EXIT_OK


def _cmd_make_dataset(args: argparse.Namespace) -> int:
    corpus = synthetic.make_corpus(args.positives, args.negatives, seed=args.seed)
    save_csv(corpus, args.output)
    print(f"wrote {len(corpus)} rows ({args.positives} attacks) to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqlicascade",
                                     description="Cascaded SQLi detection benchmark harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit one classifier and save pipeline + model")
    _add_dataset_args(p)
    p.add_argument("--kind", default=lm.PA, choices=lm.KINDS)
    p.add_argument("--family", default="tfidf-char1")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--positive-weight", type=float, default=1.0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a labelled CSV")
    _add_dataset_args(p)
    p.add_argument("--model-dir", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("bench", help="run the full repeated-benchmark protocol")
    p.add_argument("--config", help="experiment config (.json or .toml)")
    p.add_argument("--output", help="output directory override")
    p.add_argument("--repetitions", type=int)
    p.set_defaults(fn=_cmd_bench)

    p = sub.add_parser("cascade", help="fit and evaluate the two-stage cascade")
    _add_dataset_args(p)
    p.add_argument("--threshold", type=float, default=cas.DEFAULT_STAGE1_THRESHOLD)
    p.add_argument("--positive-weight", type=float, default=cas.DEFAULT_POSITIVE_WEIGHT)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_cascade)

    p = sub.add_parser("fe-rank", help="rank a measurement set by FE score")
    p.add_argument("--measurements", help="measurement JSON; defaults to the bundled set")
    p.add_argument("--alpha", type=float, nargs="+", default=[1.0, 0.98])
    p.add_argument("--output")
    p.set_defaults(fn=_cmd_fe_rank)

    p = sub.add_parser("effective-latency", help="analytic two-stage latency estimate")
    p.add_argument("--fpr", type=float, required=True)
    p.add_argument("--recall", type=float, required=True)
    p.add_argument("--prior", type=float, nargs="+", default=[0.033])
    p.add_argument("--t1", type=float, required=True, help="stage-1 ms per sample")
    p.add_argument("--t2", type=float, required=True, help="stage-2 ms per sample")
    p.set_defaults(fn=_cmd_effective_latency)

    p = sub.add_parser("make-dataset", help="write a synthetic labelled CSV")
    p.add_argument("--positives", type=int, default=synthetic.DEFAULT_POSITIVES)
    p.add_argument("--negatives", type=int, default=synthetic.DEFAULT_NEGATIVES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(fn=_cmd_make_dataset)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
