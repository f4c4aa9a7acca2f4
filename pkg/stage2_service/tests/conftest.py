from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

CONTRACTS = Path(__file__).resolve().parent.parent.parent / "contracts"


@pytest.fixture(scope="session")
def golden():
    return json.loads((CONTRACTS / "golden" / "score_cases.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def request_schema():
    return json.loads((CONTRACTS / "score_request.schema.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def response_schema():
    return json.loads((CONTRACTS / "score_response.schema.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def fixture_csv(tmp_path_factory) -> Path:
    """A 200-row labelled CSV in the detector's corpus format."""
    rng = random.Random(12)
    attacks = ["' OR 1=1 --", "1' UNION SELECT name, pass FROM users--",
               "'; DROP TABLE orders; --", "' AND SLEEP(4) --", "admin'--",
               "\" or \"\"=\"", "1; EXEC xp_cmdshell('whoami')"]
    benign = ["SELECT id FROM users WHERE id = 7", "update orders set status = 'ok'",
              "please send the report", "o'brien", "meeting notes attached",
              "INSERT INTO logs (msg) VALUES ('hi')", "where or when"]
    rows = []
    for i in range(100):
        rows.append((rng.choice(attacks) + f" /*{i}*/" * rng.randint(0, 1), 1))
        rows.append((rng.choice(benign) + (f" {i}" if rng.random() < 0.5 else ""), 0))
    rng.shuffle(rows)

    path = tmp_path_factory.mktemp("data") / "fixture200.csv"
    import csv

    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["payload", "label"])
        writer.writerows(rows)
    return path
