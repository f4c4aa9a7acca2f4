from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import numpy as np
import pytest

import sqlicascade.linear_models as lm
from sqlicascade import confusion, prf1
from sqlicascade.cascade import (
    DEFAULT_POSITIVE_WEIGHT,
    DEFAULT_STAGE1_THRESHOLD,
    FAIL_OPEN,
    FAIL_RAISE,
    CascadeConfig,
    CascadeModel,
    CascadeTrace,
    FixedLatencyMock,
    RemoteStage2,
    Stage2Error,
    Stage2Handle,
    fit_cascade,
    trigger_rate,
)

CONTRACTS = Path(__file__).resolve().parent.parent / "contracts"

TRAIN_CFG = CascadeConfig(
    stage1_train=lm.TrainConfig(epochs=5, class_weights=(1.0, DEFAULT_POSITIVE_WEIGHT),
                                shuffle_seed=0),
    stage2_train=lm.TrainConfig(epochs=5, shuffle_seed=0),
)


@pytest.fixture(scope="module")
def fitted(small_split):
    train, test = small_split
    return fit_cascade(train, TRAIN_CFG), train, test


def test_handle_validation():
    with pytest.raises(ValueError):
        Stage2Handle(variant="remote_service")  # endpoint missing
    with pytest.raises(ValueError):
        Stage2Handle(endpoint="http://x")  # endpoint on non-remote
    with pytest.raises(ValueError):
        Stage2Handle(variant="warp_drive")
    with pytest.raises(ValueError):
        Stage2Handle(fail_policy="shrug")


def test_default_cascade_config_is_the_tuned_setup():
    config = CascadeConfig()
    assert config.stage1_threshold == -0.3
    assert config.stage1_train.class_weights == (1.0, 1000.0)
    assert config.stage1_kind == lm.PA


def test_trace_invariants_on_test_corpus(fitted):
    model, _, test = fitted
    traces = model.classify_batch(list(test.payloads))
    for t in traces:
        assert t.stage2_invoked == (t.stage1_decision == 1)
        if t.stage1_decision == 0:
            assert t.final == 0 and t.stage2_decision is None
        else:
            assert t.final == t.stage2_decision


def test_stage2_call_budget(fitted):
    model, _, test = fitted

    forwarded: list[str] = []
    real = model.stage2

    class Counting:
        def score_batch(self, payloads):
            forwarded.extend(payloads)
            return real.score_batch(payloads)

    counted = CascadeModel(model.stage1_pipeline, model.stage1_model,
                           model.stage1_threshold, model.stage2_handle, Counting())
    traces = counted.classify_batch(list(test.payloads))
    n_positives = sum(t.stage1_decision for t in traces)
    assert len(forwarded) == n_positives


def test_classify_matches_classify_batch(fitted):
    model, _, test = fitted
    payloads = list(test.payloads)[:40]
    batch = model.classify_batch(payloads)
    for payload, bt in zip(payloads, batch):
        st = model.classify(payload)
        assert st.final == bt.final
        assert st.stage1_decision == bt.stage1_decision
        assert st.stage1_score == pytest.approx(bt.stage1_score, abs=1e-12)


def test_filter_branch_skips_stage2(fitted):
    model, _, test = fitted
    # force the threshold so high that nothing is suspicious
    strict = CascadeModel(model.stage1_pipeline, model.stage1_model, 1e9,
                          model.stage2_handle, model.stage2)
    trace = strict.classify("' OR 1=1 --")
    assert trace.stage1_decision == 0
    assert not trace.stage2_invoked
    assert trace.final == 0
    assert trace.t2_ms == 0.0


def test_stage2_veto_suppresses_false_alarm(fitted):
    model, _, _ = fitted

    class AlwaysBenign:
        def score_batch(self, payloads):
            return [0.0] * len(payloads), [0] * len(payloads)

    vetoed = CascadeModel(model.stage1_pipeline, model.stage1_model, -1e9,
                          model.stage2_handle, AlwaysBenign())
    trace = vetoed.classify("select id from users")
    assert trace.stage1_decision == 1 and trace.stage2_invoked
    assert trace.final == 0


def test_echo_mock_keeps_stage1_accuracy(fitted):
    # a stage 2 that confirms every forwarded payload reproduces stage-1
    # decisions, so cascade accuracy equals stage-1 accuracy exactly
    model, _, test = fitted
    echo = CascadeModel(model.stage1_pipeline, model.stage1_model,
                        model.stage1_threshold, model.stage2_handle,
                        FixedLatencyMock(0.0))
    traces = echo.classify_batch(list(test.payloads))
    finals = [t.final for t in traces]
    s1 = (model.stage1_scores(test) >= model.stage1_threshold).astype(int).tolist()
    assert finals == s1


def test_cascade_fp_never_exceeds_stage1_fp(fitted):
    model, _, test = fitted
    traces = model.classify_batch(list(test.payloads))
    c_final = confusion([t.final for t in traces], list(test.labels))
    c_stage1 = confusion([t.stage1_decision for t in traces], list(test.labels))
    assert c_final.fp <= c_stage1.fp


def test_lower_threshold_never_lowers_stage1_recall(fitted):
    model, _, test = fitted
    scores = model.stage1_scores(test)
    truth = np.array(test.labels)
    recall_tuned = prf1(confusion((scores >= -0.3).astype(int).tolist(), truth.tolist())).recall
    recall_plain = prf1(confusion((scores >= 0.0).astype(int).tolist(), truth.tolist())).recall
    assert recall_tuned >= recall_plain


def test_degenerate_config_is_plain_stage1_plus_stage2(small_split):
    train, test = small_split
    config = CascadeConfig(stage1_threshold=0.0,
                           stage1_train=lm.TrainConfig(epochs=5, shuffle_seed=0),
                           stage2_train=lm.TrainConfig(epochs=5, shuffle_seed=0))
    model = fit_cascade(train, config)
    assert model.stage1_model.class_weights == (1.0, 1.0)
    traces = model.classify_batch(list(test.payloads))
    plain = lm.predict_matrix(model.stage1_model,
                              model.stage1_pipeline.transform(test), 0.0)
    assert [t.stage1_decision for t in traces] == plain.tolist()


def test_trigger_rate():
    mk = lambda d: CascadeTrace(stage1_score=0.0, stage1_decision=d,
                                stage2_invoked=bool(d), stage2_decision=d or None,
                                final=d)
    assert trigger_rate([mk(0), mk(0)]) == 0.0
    assert trigger_rate([mk(1), mk(1)]) == 1.0
    assert trigger_rate([mk(1), mk(0), mk(0), mk(0)]) == 0.25
    with pytest.raises(ValueError):
        trigger_rate([])


# -- failure policies ---------------------------------------------------------------

class Exploding:
    def score_batch(self, payloads):
        raise RuntimeError("boom")


def _forced_cascade(fitted, scorer, policy) -> CascadeModel:
    model, _, _ = fitted
    handle = Stage2Handle(variant="fixed_latency_mock", fail_policy=policy)
    return CascadeModel(model.stage1_pipeline, model.stage1_model, -1e9, handle, scorer)


def test_fail_closed_flags_payload(fitted):
    model = _forced_cascade(fitted, Exploding(), "fail_closed")
    trace = model.classify("select 1")
    assert trace.final == 1
    assert trace.stage2_error is not None


def test_fail_open_passes_payload(fitted):
    model = _forced_cascade(fitted, Exploding(), FAIL_OPEN)
    trace = model.classify("select 1")
    assert trace.final == 0
    assert trace.stage2_error is not None


def test_fail_raise_carries_stage1_verdict(fitted):
    model = _forced_cascade(fitted, Exploding(), FAIL_RAISE)
    with pytest.raises(Stage2Error) as exc_info:
        model.classify("select 1")
    assert exc_info.value.stage1_decision == 1


def test_batch_failure_resolves_every_payload(fitted):
    model = _forced_cascade(fitted, Exploding(), "fail_closed")
    traces = model.classify_batch(["a", "b", "c"])
    assert [t.final for t in traces] == [1, 1, 1]
    assert all(t.stage2_error for t in traces)


# -- remote wire protocol -------------------------------------------------------------

class _StubHandler(BaseHTTPRequestHandler):
    server_version = "stub"
    behavior = "golden"
    seen: list[dict] = []
    responses: dict[str, dict] = {}

    def do_POST(self):  # noqa: N802 - http.server API
        if self.path != "/v1/score":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        type(self).seen.append(body)
        if self.behavior == "http500":
            self.send_error(500)
            return
        if self.behavior == "malformed":
            payload = b'{"scores": "oops"}'
        elif self.behavior == "misaligned":
            payload = json.dumps({"scores": [0.5], "labels": [1, 0],
                                  "model_id": "stub"}).encode()
        else:
            key = json.dumps(body["payloads"], sort_keys=True)
            payload = json.dumps(self.responses[key]).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):  # quiet
        pass


@pytest.fixture()
def stub_server():
    golden = json.loads((CONTRACTS / "golden" / "score_cases.json").read_text())
    _StubHandler.responses = {
        json.dumps(case["request"]["payloads"], sort_keys=True): case["response"]
        for case in golden["cases"]
    }
    _StubHandler.behavior = "golden"
    _StubHandler.seen = []
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server, golden
    server.shutdown()
    thread.join(timeout=5)


def test_remote_client_round_trips_golden_cases(stub_server):
    server, golden = stub_server
    client = RemoteStage2(f"http://127.0.0.1:{server.server_port}")
    for case in golden["cases"]:
        payloads = case["request"]["payloads"]
        if not payloads:
            continue  # the cascade never sends an empty batch
        scores, labels = client.score_batch(payloads)
        assert scores == case["response"]["scores"]
        assert labels == case["response"]["labels"]
    # requests must be shaped exactly like the contract
    schema_fields = {"payloads"}
    assert all(set(body) == schema_fields for body in _StubHandler.seen)


def test_remote_client_rejects_http_errors(stub_server):
    server, _ = stub_server
    _StubHandler.behavior = "http500"
    client = RemoteStage2(f"http://127.0.0.1:{server.server_port}")
    with pytest.raises(RuntimeError, match="500"):
        client.score_batch(["x"])


def test_remote_client_rejects_malformed_body(stub_server):
    server, _ = stub_server
    _StubHandler.behavior = "malformed"
    client = RemoteStage2(f"http://127.0.0.1:{server.server_port}")
    with pytest.raises(RuntimeError, match="malformed"):
        client.score_batch(["x"])


def test_remote_client_rejects_misaligned_arrays(stub_server):
    server, _ = stub_server
    _StubHandler.behavior = "misaligned"
    client = RemoteStage2(f"http://127.0.0.1:{server.server_port}")
    with pytest.raises(RuntimeError, match="align"):
        client.score_batch(["x"])


def test_remote_client_unreachable_host():
    client = RemoteStage2("http://127.0.0.1:1", timeout_s=0.5)
    with pytest.raises(RuntimeError, match="request failed"):
        client.score_batch(["x"])


def test_remote_cascade_follows_stub_decisions(fitted, stub_server):
    server, golden = stub_server
    model, _, _ = fitted
    handle = Stage2Handle(variant="remote_service",
                          endpoint=f"http://127.0.0.1:{server.server_port}")
    remote = CascadeModel(model.stage1_pipeline, model.stage1_model, -1e9,
                          handle, RemoteStage2(handle.endpoint))
    case = golden["cases"][0]
    traces = remote.classify_batch(case["request"]["payloads"])
    assert [t.final for t in traces] == case["response"]["labels"]
