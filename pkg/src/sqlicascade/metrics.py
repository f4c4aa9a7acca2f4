"""Classification metrics, the F1-efficiency score, and the effective-latency model."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


class ClassificationMetrics(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    f1: float
    fallout: float


def confusion(predictions: Sequence[int], truth: Sequence[int]) -> ConfusionCounts:
    if len(predictions) != len(truth):
        raise ValueError(f"{len(predictions)} predictions vs {len(truth)} truth labels")
    tp = tn = fp = fn = 0
    for p, t in zip(predictions, truth):
        if t == 1:
            if p == 1:
                tp += 1
            else:
                fn += 1
        else:
            if p == 1:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def _ratio(num: int, den: int) -> float:
    # 0/0 is defined as 0 throughout
    return num / den if den else 0.0


def prf1(c: ConfusionCounts) -> ClassificationMetrics:
    """Accuracy, precision, recall = TP/(TP+FN), F1, fall-out = FP/(TN+FP)."""
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    f1 = _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn)
    return ClassificationMetrics(
        accuracy=_ratio(c.tp + c.tn, c.total),
        precision=precision,
        recall=recall,
        f1=f1,
        fallout=_ratio(c.fp, c.tn + c.fp),
    )


@dataclass(frozen=True)
class MethodMeasurement:
    """One method's detection quality and speed: F1 plus per-sample latency."""

    name: str
    f1: float
    inference_ms: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.f1 <= 1.0:
            raise ValueError(f"f1 must be in [0,1], got {self.f1}")
        if not self.inference_ms > 0:
            raise ValueError(f"inference_ms must be > 0, got {self.inference_ms}")


def fe_score(m: MethodMeasurement, alpha: float,
             context: Sequence[MethodMeasurement]) -> float:
    """Speed-aware quality score: alpha*f1 + (1-alpha)*l.

    l is the normalized inference-speed term, min-latency-in-context divided
    by this method's latency, so l is in (0,1] and the fastest method in the
    comparison context gets exactly 1.  FE is context-relative by
    construction: always report the context alongside the score.
    """
    if not context:
        raise ValueError("FE needs a nonempty comparison context")
    if m not in context:
        raise ValueError(f"method {m.name!r} is not part of the comparison context")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0,1], got {alpha}")
    fastest = min(x.inference_ms for x in context)
    l = fastest / m.inference_ms
    return alpha * m.f1 + (1.0 - alpha) * l


def rank_by_fe(context: Sequence[MethodMeasurement], alpha: float) -> list[MethodMeasurement]:
    """Methods ordered by descending FE; ties broken by lower latency, then name."""
    if not context:
        raise ValueError("cannot rank an empty context")
    return sorted(context,
                  key=lambda m: (-fe_score(m, alpha, context), m.inference_ms, m.name))


@dataclass(frozen=True)
class LatencyModelInputs:
    """Measured quantities feeding the analytic two-stage latency model."""

    fpr: float
    recall: float
    prior_attack: float
    t1_ms: float
    t2_ms: float

    def __post_init__(self) -> None:
        for name in ("fpr", "recall", "prior_attack"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability in [0,1], got {v}")
        if self.t1_ms < 0 or self.t2_ms < 0:
            raise ValueError("per-stage latencies must be nonnegative")


def effective_positive_rate(inputs: LatencyModelInputs) -> float:
    """Probability that stage 1 emits a positive decision on live traffic.

    Marginalizes the stage-1 decision over the true class:
    FPR*(1-prior) + Recall*prior.
    """
    p = inputs.prior_attack
    return inputs.fpr * (1.0 - p) + inputs.recall * p


def effective_latency(inputs: LatencyModelInputs) -> float:
    """Expected per-payload latency of the two-stage system, in milliseconds.

    Stage 1 runs on every payload; stage 2 only on stage-1 positives, so the
    expectation is t1 + t2 * p(stage-1 positive).
    """
    return inputs.t1_ms + inputs.t2_ms * effective_positive_rate(inputs)


def cascade_speedup(inputs: LatencyModelInputs) -> float:
    """How much faster the cascade is than running stage 2 on everything."""
    return inputs.t2_ms / effective_latency(inputs)


class LatencyStats(NamedTuple):
    mean_ms: float
    median_ms: float
    p99_ms: float


def summarize_latencies(per_sample_ms: Sequence[float]) -> LatencyStats:
    if not per_sample_ms:
        raise ValueError("no latency samples to summarize")
    xs = sorted(per_sample_ms)
    n = len(xs)
    median = xs[n // 2] if n % 2 else 0.5 * (xs[n // 2 - 1] + xs[n // 2])
    p99_idx = min(n - 1, int(round(0.99 * (n - 1))))
    return LatencyStats(mean_ms=sum(xs) / n, median_ms=median, p99_ms=xs[p99_idx])


# -- measurement-set import/export for offline FE ranking --------------------

def load_measurements(path: str | Path) -> list[MethodMeasurement]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError("measurement file must hold a JSON array")
    return [MethodMeasurement(name=str(r["name"]), f1=float(r["f1"]),
                              inference_ms=float(r["inference_ms"])) for r in raw]


def dump_measurements(measurements: Iterable[MethodMeasurement], path: str | Path) -> None:
    rows = [{"name": m.name, "f1": m.f1, "inference_ms": m.inference_ms}
            for m in measurements]
    Path(path).write_text(json.dumps(rows, indent=2), encoding="utf-8")
