"""Deterministic keyword scorer for integration tests.

Each indicator substring found in the lowercased payload adds 0.25 to the
score, capped at 1.0.  The rule set is frozen: the golden wire fixtures in
contracts/golden/ are computed from it, and both the service tests and the
detector-side client tests replay them.
"""

from __future__ import annotations

from typing import Sequence

MODEL_ID = "mock-keyword-v1"

INDICATORS: tuple[str, ...] = (
    "' or ",
    '" or ',
    "or 1=1",
    "1=1",
    "union select",
    "--",
    "/*",
    "#",
    "; drop",
    "; delete",
    "; exec",
    "xp_",
    "sleep(",
    "waitfor",
    "benchmark(",
    "extractvalue",
    "updatexml",
    "' and ",
    "admin'",
)

HIT_WEIGHT = 0.25


def score_payload(payload: str) -> float:
    lowered = payload.lower()
    hits = sum(1 for needle in INDICATORS if needle in lowered)
    return min(1.0, HIT_WEIGHT * hits)


class MockScorer:
    """Stateless; safe for concurrent requests."""

    model_id = MODEL_ID

    def score_batch(self, payloads: Sequence[str]) -> list[float]:
        return [score_payload(p) for p in payloads]
