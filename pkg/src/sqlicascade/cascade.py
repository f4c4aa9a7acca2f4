"""Two-stage cascade detector: a fast, sensitivity-tuned filter in front of a
slow, accurate re-checker.

Stage 1 is a margin-trained linear model whose positive class is heavily
overweighted and whose decision threshold sits below zero, so it rarely
misses an attack at the cost of extra false alarms.  Only the payloads it
flags are forwarded to stage 2, which re-scores them and suppresses the
false alarms.  A payload rejected by stage 1 never reaches stage 2.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

import requests

from . import linear_models as lm
from .corpus import LabeledCorpus
from .features import FeaturePipeline, family_pipeline, hconcat

IN_PROCESS_REFERENCE = "in_process_reference"
FIXED_LATENCY_MOCK = "fixed_latency_mock"
REMOTE_SERVICE = "remote_service"
STAGE2_VARIANTS = (IN_PROCESS_REFERENCE, FIXED_LATENCY_MOCK, REMOTE_SERVICE)

FAIL_CLOSED = "fail_closed"  # treat a stage-2 outage as attack
FAIL_OPEN = "fail_open"      # treat a stage-2 outage as benign
FAIL_RAISE = "raise"         # surface the outage to the caller
FAIL_POLICIES = (FAIL_CLOSED, FAIL_OPEN, FAIL_RAISE)

SCORE_PATH = "/v1/score"

DEFAULT_STAGE1_THRESHOLD = -0.3
DEFAULT_POSITIVE_WEIGHT = 1000.0


class Stage2Error(RuntimeError):
    """Stage 2 could not produce a verdict; carries the stage-1 decision so the
    caller can still apply its own fail-open/fail-closed policy."""

    def __init__(self, message: str, stage1_decision: int, stage1_score: float):
        super().__init__(message)
        self.stage1_decision = stage1_decision
        self.stage1_score = stage1_score


@dataclass(frozen=True)
class Stage2Handle:
    """Which stage-2 backend to attach, and how to talk to it.

    ``endpoint`` must be set exactly when the variant is remote;
    ``injected_latency_ms`` only applies to the fixed-latency mock.
    """

    variant: str = IN_PROCESS_REFERENCE
    endpoint: str | None = None
    injected_latency_ms: float = 0.0
    timeout_s: float = 10.0
    max_in_flight: int = 8
    fail_policy: str = FAIL_CLOSED

    def __post_init__(self) -> None:
        if self.variant not in STAGE2_VARIANTS:
            raise ValueError(f"unknown stage-2 variant {self.variant!r}")
        if (self.variant == REMOTE_SERVICE) != (self.endpoint is not None):
            raise ValueError("endpoint must be set exactly for the remote variant")
        if self.injected_latency_ms < 0:
            raise ValueError("injected latency must be nonnegative")
        if self.fail_policy not in FAIL_POLICIES:
            raise ValueError(f"unknown fail policy {self.fail_policy!r}")


@dataclass
class CascadeTrace:
    """Everything one payload's pass through the cascade decided and cost."""

    stage1_score: float
    stage1_decision: int
    stage2_invoked: bool
    stage2_decision: int | None
    final: int
    t1_ms: float = 0.0
    t2_ms: float = 0.0
    stage2_error: str | None = None


class Stage2Scorer(Protocol):
    def score_batch(self, payloads: Sequence[str]) -> tuple[list[float], list[int]]:
        """Scores and labels positionally aligned with the payloads."""


class ReferenceStage2:
    """Slow-but-strong in-process re-checker.

    A log-loss linear model over concatenated idf-weighted character 1-3 gram
    features; heavier than stage 1 by construction, which is all the cascade
    property suite needs.
    """

    FAMILIES = ("tfidf-char1", "tfidf-char2", "tfidf-char3")

    def __init__(self, train_config: lm.TrainConfig | None = None):
        self.train_config = train_config or lm.TrainConfig()
        self.pipelines: list[FeaturePipeline] = []
        self.model: lm.Model | None = None

    def fit(self, train: LabeledCorpus) -> "ReferenceStage2":
        self.pipelines = [family_pipeline(f) for f in self.FAMILIES]
        matrix = hconcat([p.fit_transform(train) for p in self.pipelines])
        self.model = lm.fit(lm.SGD_LOG, matrix, train.labels, self.train_config)
        return self

    def score_batch(self, payloads: Sequence[str]) -> tuple[list[float], list[int]]:
        if self.model is None:
            raise RuntimeError("reference stage 2 is not fitted")
        probe = LabeledCorpus(tuple(payloads), (0,) * len(payloads), source_id="stage2-batch")
        matrix = hconcat([p.transform(probe) for p in self.pipelines])
        scores = lm.score_matrix(self.model, matrix)
        labels = (scores >= 0.0).astype(int)
        return scores.tolist(), labels.tolist()


class FixedLatencyMock:
    """Stage-2 stand-in that burns a fixed per-payload latency and confirms
    every forwarded payload (echoing stage 1's positive verdict)."""

    def __init__(self, injected_latency_ms: float):
        self.injected_latency_ms = injected_latency_ms

    def score_batch(self, payloads: Sequence[str]) -> tuple[list[float], list[int]]:
        if self.injected_latency_ms > 0 and payloads:
            time.sleep(self.injected_latency_ms * len(payloads) / 1000.0)
        return [1.0] * len(payloads), [1] * len(payloads)


class RemoteStage2:
    """HTTP client for the external scoring service.

    POSTs ``{"payloads": [...]}`` to ``<endpoint>/v1/score`` and expects
    ``{"scores": [...], "labels": [...], "model_id": "..."}`` with arrays
    positionally aligned to the request.  Non-200 responses, malformed
    bodies, and timeouts all raise; in-flight requests are bounded.
    """

    def __init__(self, endpoint: str, timeout_s: float = 10.0, max_in_flight: int = 8):
        self.endpoint = endpoint.rstrip("/")
        self.timeout_s = timeout_s
        self._gate = threading.Semaphore(max_in_flight)
        self._session = requests.Session()

    def score_batch(self, payloads: Sequence[str]) -> tuple[list[float], list[int]]:
        url = self.endpoint + SCORE_PATH
        with self._gate:
            try:
                resp = self._session.post(url, json={"payloads": list(payloads)},
                                          timeout=self.timeout_s)
            except requests.RequestException as exc:
                raise RuntimeError(f"stage-2 request failed: {exc}") from exc
        if resp.status_code != 200:
            raise RuntimeError(f"stage-2 returned HTTP {resp.status_code}")
        try:
            body = resp.json()
            scores = [float(s) for s in body["scores"]]
            labels = [int(v) for v in body["labels"]]
            model_id = body["model_id"]
        except (ValueError, KeyError, TypeError) as exc:
            raise RuntimeError(f"stage-2 response malformed: {exc}") from exc
        if len(scores) != len(payloads) or len(labels) != len(payloads):
            raise RuntimeError("stage-2 response arrays do not align with the request")
        if any(v not in (0, 1) for v in labels):
            raise RuntimeError("stage-2 labels must be 0 or 1")
        if not isinstance(model_id, str):
            raise RuntimeError("stage-2 model_id must be a string")
        return scores, labels


def _build_scorer(handle: Stage2Handle, train: LabeledCorpus | None,
                  stage2_train_config: lm.TrainConfig | None) -> Stage2Scorer:
    if handle.variant == IN_PROCESS_REFERENCE:
        if train is None:
            raise ValueError("the in-process reference stage 2 needs training data")
        return ReferenceStage2(stage2_train_config).fit(train)
    if handle.variant == FIXED_LATENCY_MOCK:
        return FixedLatencyMock(handle.injected_latency_ms)
    assert handle.endpoint is not None
    return RemoteStage2(handle.endpoint, handle.timeout_s, handle.max_in_flight)


@dataclass
class CascadeConfig:
    """Stage-1 tuning knobs; defaults reproduce the sensitivity-tuned setup:
    positive samples upweighted 1000x and the decision threshold at -0.3."""

    stage1_kind: str = lm.PA
    stage1_family: str = "tfidf-char1"
    stage1_threshold: float = DEFAULT_STAGE1_THRESHOLD
    stage1_train: lm.TrainConfig = field(default_factory=lambda: lm.TrainConfig(
        class_weights=(1.0, DEFAULT_POSITIVE_WEIGHT)))
    stage2_train: lm.TrainConfig = field(default_factory=lm.TrainConfig)


class CascadeModel:
    """A fitted two-stage detector; immutable once fitted, safe to score from
    multiple threads."""

    def __init__(self, stage1_pipeline: FeaturePipeline, stage1_model: lm.Model,
                 stage1_threshold: float, stage2_handle: Stage2Handle,
                 stage2: Stage2Scorer):
        self.stage1_pipeline = stage1_pipeline
        self.stage1_model = stage1_model
        self.stage1_threshold = stage1_threshold
        self.stage2_handle = stage2_handle
        self.stage2 = stage2
        self.measured_t1_ms: float | None = None
        self.measured_t2_ms: float | None = None

    # -- stage 1 -------------------------------------------------------------

    def stage1_score(self, payload: str) -> float:
        return self.stage1_model.decision_score(self.stage1_pipeline.transform_payload(payload))

    def stage1_scores(self, corpus: LabeledCorpus) -> np.ndarray:
        return lm.score_matrix(self.stage1_model, self.stage1_pipeline.transform(corpus))

    # -- full cascade ----------------------------------------------------------

    def _resolve_failure(self, exc: Exception, score: float) -> tuple[int, str]:
        policy = self.stage2_handle.fail_policy
        if policy == FAIL_RAISE:
            raise Stage2Error(str(exc), stage1_decision=1, stage1_score=score) from exc
        return (1 if policy == FAIL_CLOSED else 0), str(exc)

    def classify(self, payload: str) -> CascadeTrace:
        t0 = time.perf_counter()
        score = self.stage1_score(payload)
        decision = 1 if score >= self.stage1_threshold else 0
        t1_ms = (time.perf_counter() - t0) * 1000.0

        if decision == 0:
            return CascadeTrace(stage1_score=score, stage1_decision=0,
                                stage2_invoked=False, stage2_decision=None,
                                final=0, t1_ms=t1_ms)

        t0 = time.perf_counter()
        error: str | None = None
        try:
            _, labels = self.stage2.score_batch([payload])
            verdict = labels[0]
        except Exception as exc:  # noqa: BLE001 - resolved by the fail policy
            verdict, error = self._resolve_failure(exc, score)
        t2_ms = (time.perf_counter() - t0) * 1000.0
        return CascadeTrace(stage1_score=score, stage1_decision=1,
                            stage2_invoked=True, stage2_decision=verdict,
                            final=verdict, t1_ms=t1_ms, t2_ms=t2_ms,
                            stage2_error=error)

    def classify_batch(self, payloads: Sequence[str]) -> list[CascadeTrace]:
        """Classify many payloads, forwarding all stage-1 positives to stage 2
        in a single batch; per-stage times are batch-amortized."""
        if not payloads:
            return []
        probe = LabeledCorpus(tuple(payloads), (0,) * len(payloads), source_id="batch")
        t0 = time.perf_counter()
        scores = self.stage1_scores(probe)
        decisions = (scores >= self.stage1_threshold).astype(int)
        t1_ms = (time.perf_counter() - t0) * 1000.0 / len(payloads)

        forwarded = np.flatnonzero(decisions == 1)
        verdicts: dict[int, int] = {}
        errors: dict[int, str] = {}
        t2_ms = 0.0
        if forwarded.size:
            t0 = time.perf_counter()
            try:
                _, labels = self.stage2.score_batch([payloads[i] for i in forwarded])
                verdicts = {int(i): labels[k] for k, i in enumerate(forwarded)}
            except Exception as exc:  # noqa: BLE001 - resolved by the fail policy
                for i in forwarded:
                    verdict, msg = self._resolve_failure(exc, float(scores[i]))
                    verdicts[int(i)] = verdict
                    errors[int(i)] = msg
            t2_ms = (time.perf_counter() - t0) * 1000.0 / forwarded.size

        traces = []
        for i, payload in enumerate(payloads):
            if decisions[i]:
                traces.append(CascadeTrace(
                    stage1_score=float(scores[i]), stage1_decision=1,
                    stage2_invoked=True, stage2_decision=verdicts[i],
                    final=verdicts[i], t1_ms=t1_ms, t2_ms=t2_ms,
                    stage2_error=errors.get(i)))
            else:
                traces.append(CascadeTrace(
                    stage1_score=float(scores[i]), stage1_decision=0,
                    stage2_invoked=False, stage2_decision=None,
                    final=0, t1_ms=t1_ms))
        return traces


def fit_cascade(train: LabeledCorpus, config: CascadeConfig | None = None,
                stage2: Stage2Handle | None = None) -> CascadeModel:
    """Fit stage 1 on the training corpus and attach the chosen stage 2.

    The in-process reference variant fits its own model on the same training
    split; the mock and remote variants need no fitting here.
    """
    config = config or CascadeConfig()
    stage2 = stage2 or Stage2Handle()
    pipeline = family_pipeline(config.stage1_family)
    matrix = pipeline.fit_transform(train)
    stage1_model = lm.fit(config.stage1_kind, matrix, train.labels, config.stage1_train)
    scorer = _build_scorer(stage2, train, config.stage2_train)
    return CascadeModel(stage1_pipeline=pipeline, stage1_model=stage1_model,
                        stage1_threshold=config.stage1_threshold,
                        stage2_handle=stage2, stage2=scorer)


def trigger_rate(traces: Sequence[CascadeTrace]) -> float:
    """Fraction of payloads on which stage 1 fired (and stage 2 was invoked)."""
    if not traces:
        raise ValueError("no traces to summarize")
    return sum(t.stage1_decision for t in traces) / len(traces)
