from __future__ import annotations

import json
import time

import jsonschema
import pytest

import sqlicascade.linear_models as lm
from sqlicascade.bench_cli import (
    EXIT_OK,
    EXIT_PARTIAL,
    ExperimentConfig,
    LatencySpec,
    TABLE_COLUMNS,
    default_roster,
    estimate_cascade,
    main,
    measure_latency,
    reference_measurements_path,
    report_schema_path,
    run_experiment,
)
from sqlicascade.cascade import FixedLatencyMock

SMALL_SYNTH = {"n_positive": 90, "n_negative": 160, "seed": 5}
FAST_LATENCY = {"warmup": 0, "repeats": 2, "batch_size": 50}


def small_config(tmp_path, roster, reps=2, **kwargs):
    return ExperimentConfig(
        synthetic=SMALL_SYNTH,
        repetitions=reps,
        roster=roster,
        output_dir=str(tmp_path / "out"),
        latency=LatencySpec(**FAST_LATENCY),
        train={"epochs": 3},
        **kwargs,
    )


ROSTER = [
    {"name": "PA", "kind": lm.PA, "family": "tfidf-char1"},
    {"name": "Ens", "ensemble": {"strategy": "by_feature",
                                 "classifier_kinds": [lm.PA, lm.SGD_HINGE, lm.MULTINOMIAL_NB],
                                 "feature_families": ["boc", "tfidf-char1"]}},
    {"name": "Cascade", "cascade": {}},
]


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("bench")
    config = small_config(tmp, ROSTER)
    report, code = run_experiment(config)
    return config, report, code


def test_report_validates_against_shipped_schema(experiment):
    config, report, code = experiment
    assert code == EXIT_OK
    schema = json.loads(report_schema_path().read_text())
    jsonschema.validate(report, schema)
    on_disk = json.loads(open(f"{config.output_dir}/report.json").read())
    jsonschema.validate(on_disk, schema)


def test_report_has_all_methods_and_runs(experiment):
    _, report, _ = experiment
    assert [m["name"] for m in report["methods"]] == ["PA", "Ens", "Cascade"]
    for m in report["methods"]:
        assert not m["failed"]
        assert len(m["runs"]) == 2
        assert m["latency"] is not None
    cascade_row = report["methods"][2]
    assert "cascade" in cascade_row
    assert 0.0 <= cascade_row["cascade"]["trigger_rate"] <= 1.0
    assert cascade_row["cascade"]["estimate"]["speedup_vs_stage2"] > 0


def test_markdown_table_columns(experiment):
    config, _, _ = experiment
    table = open(f"{config.output_dir}/tables/methods.md").read().splitlines()
    header = [c.strip() for c in table[0].strip("|").split("|")]
    assert header == TABLE_COLUMNS


def test_fe_ranking_file(experiment):
    config, report, _ = experiment
    fe = json.loads(open(f"{config.output_dir}/fe_ranking.json").read())
    assert [r["alpha"] for r in fe] == [1.0, 0.98]
    for r in fe:
        assert sorted(r["ranking"]) == sorted(r["context"])
    assert fe == report["fe_rankings"]


def test_metrics_are_deterministic_across_reruns(experiment, tmp_path):
    # bit-identical metrics; wall-clock fields are exempt by design
    def strip_timing(runs):
        return [{k: v for k, v in r.items() if k != "train_ms_per_sample"} for r in runs]

    config, report, _ = experiment
    config2 = small_config(tmp_path, ROSTER)
    report2, _ = run_experiment(config2)
    for m1, m2 in zip(report["methods"], report2["methods"]):
        assert strip_timing(m1["runs"]) == strip_timing(m2["runs"])


def test_failed_method_isolates_and_exit_code(tmp_path):
    roster = [
        {"name": "good", "kind": lm.PA, "family": "tfidf-char1"},
        {"name": "bad", "kind": lm.PA, "family": "no-such-family"},
    ]
    report, code = run_experiment(small_config(tmp_path, roster, reps=1))
    assert code == EXIT_PARTIAL
    by_name = {m["name"]: m for m in report["methods"]}
    assert not by_name["good"]["failed"]
    assert by_name["bad"]["failed"]
    assert "no-such-family" in by_name["bad"]["error"]


def test_default_roster_shape():
    roster = default_roster()
    names = [r["name"] for r in roster]
    assert "PassiveAggressive" in names
    assert {"Ensemble 1", "Ensemble 2", "Ensemble 3", "Proposed"} <= set(names)


# -- measure_latency ------------------------------------------------------------------

def test_measure_latency_recovers_injected_sleep():
    mock = FixedLatencyMock(2.0)
    stats = measure_latency(mock, ["x"] * 100, LatencySpec(warmup=0, repeats=2, batch_size=100))
    assert stats.mean_ms == pytest.approx(2.0, rel=0.25)


def test_measure_latency_amortizes_across_batch_sizes():
    mock = FixedLatencyMock(0.5)
    small = measure_latency(mock, ["x"] * 50, LatencySpec(warmup=0, repeats=2, batch_size=50))
    big = measure_latency(mock, ["x"] * 100, LatencySpec(warmup=0, repeats=2, batch_size=100))
    assert small.mean_ms <= 2 * big.mean_ms
    assert big.mean_ms <= 2 * small.mean_ms


def test_measure_latency_warmup_not_slower():
    # warmed runs must not be slower than cold ones (non-strict)
    calls = {"n": 0}

    def cold_start(payloads):
        calls["n"] += 1
        if calls["n"] == 1:
            time.sleep(0.05)

    warm = measure_latency(cold_start, ["x"] * 10, LatencySpec(warmup=1, repeats=3, batch_size=10))
    calls["n"] = 0
    cold = measure_latency(cold_start, ["x"] * 10, LatencySpec(warmup=0, repeats=3, batch_size=10))
    assert warm.mean_ms <= cold.mean_ms


def test_measure_latency_validation():
    with pytest.raises(ValueError):
        measure_latency(FixedLatencyMock(0.0), [], LatencySpec())
    with pytest.raises(ValueError):
        LatencySpec(warmup=-1)
    with pytest.raises(TypeError):
        measure_latency(object(), ["x"])


# -- estimation and CLI ------------------------------------------------------------------

def test_estimate_cascade_published_inputs():
    est = estimate_cascade(fpr=0.0157, recall=0.9973, prior_attack=0.033,
                           t1_ms=0.000314, t2_ms=2.047714)
    assert est["effective_latency_ms"] == pytest.approx(0.0988, abs=1e-4)
    assert 20.0 <= est["speedup_vs_stage2"] <= 21.0


def test_config_file_json_and_toml(tmp_path):
    base = {"synthetic": SMALL_SYNTH, "repetitions": 3, "output_dir": "x"}
    jpath = tmp_path / "c.json"
    jpath.write_text(json.dumps(base))
    cfg = ExperimentConfig.from_file(jpath)
    assert cfg.repetitions == 3 and cfg.synthetic["seed"] == 5
    tpath = tmp_path / "c.toml"
    tpath.write_text(
        'repetitions = 4\noutput_dir = "y"\n[synthetic]\nn_positive = 10\n'
        'n_negative = 20\nseed = 1\n[latency]\nwarmup = 0\n')
    cfg2 = ExperimentConfig.from_file(tpath, overrides={"output_dir": "z"})
    assert cfg2.repetitions == 4
    assert cfg2.output_dir == "z"
    assert cfg2.latency.warmup == 0


def test_cli_make_dataset_train_eval(tmp_path, capsys):
    data = tmp_path / "data.csv"
    assert main(["make-dataset", "--positives", "60", "--negatives", "90",
                 "--seed", "3", "--output", str(data)]) == EXIT_OK
    capsys.readouterr()

    model_dir = tmp_path / "model"
    assert main(["train", "--dataset", str(data), "--output", str(model_dir),
                 "--seed", "1"]) == EXIT_OK
    trained = json.loads(capsys.readouterr().out)
    assert trained["saved_to"] == str(model_dir)
    assert (model_dir / "pipeline.json").exists()
    assert (model_dir / "model.json").exists()

    assert main(["eval", "--dataset", str(data), "--model-dir", str(model_dir)]) == EXIT_OK
    evaluated = json.loads(capsys.readouterr().out)
    assert set(evaluated["counts"]) == {"tp", "tn", "fp", "fn"}
    assert 0.0 <= evaluated["metrics"]["f1"] <= 1.0


def test_cli_effective_latency(capsys):
    assert main(["effective-latency", "--fpr", "0.0157", "--recall", "0.9973",
                 "--t1", "0.000314", "--t2", "2.047714"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["effective_latency_ms"] == pytest.approx(0.0988, abs=1e-4)


def test_cli_fe_rank_uses_bundled_measurements(capsys, tmp_path):
    out_file = tmp_path / "fe.json"
    assert main(["fe-rank", "--alpha", "0.98", "--output", str(out_file)]) == EXIT_OK
    ranked = json.loads(out_file.read_text())
    assert ranked[0]["alpha"] == 0.98
    assert ranked[0]["ranking"][0]["name"] == "PassiveAggressive"


def test_cli_prior_sweep_is_monotone(capsys):
    assert main(["effective-latency", "--fpr", "0.0157", "--recall", "0.9973",
                 "--prior", "0.0", "0.033", "0.1",
                 "--t1", "0.000314", "--t2", "2.047714"]) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    lat = [r["effective_latency_ms"] for r in rows]
    assert lat == sorted(lat)


def test_reference_measurements_exist():
    rows = json.loads(reference_measurements_path().read_text())
    assert len(rows) == 35
    assert {"single", "ensemble", "transformer"} == {r["group"] for r in rows}


def test_external_measurements_join_the_fe_context(tmp_path):
    ext = tmp_path / "ext.json"
    ext.write_text(json.dumps([{"name": "BigTransformer", "f1": 0.9999,
                                "inference_ms": 5.0}]))
    roster = [{"name": "PA", "kind": lm.PA, "family": "tfidf-char1"}]
    config = small_config(tmp_path, roster, reps=1, external_measurements=str(ext))
    report, code = run_experiment(config)
    assert code == EXIT_OK
    for ranking in report["fe_rankings"]:
        assert set(ranking["context"]) == {"PA", "BigTransformer"}
        assert set(ranking["ranking"]) == {"PA", "BigTransformer"}
    # alpha=1.0 ranks by F1 alone: the external row wins there
    assert report["fe_rankings"][0]["ranking"][0] == "BigTransformer"
