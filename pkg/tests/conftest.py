from __future__ import annotations

import pytest

from sqlicascade import LabeledCorpus, SplitSpec, stratified_split
from sqlicascade.synthetic import make_corpus


@pytest.fixture()
def tiny_corpus() -> LabeledCorpus:
    return LabeledCorpus(
        payloads=(
            "SELECT id FROM users WHERE id = 4",
            "update orders set status = 'shipped' where id = 9",
            "please send the report today",
            "o'brien",
            "' OR 1=1 --",
            "1' UNION SELECT username, password FROM users--",
            "'; DROP TABLE users; --",
            "' AND SLEEP(5) --",
        ),
        labels=(0, 0, 0, 0, 1, 1, 1, 1),
        source_id="tiny",
    )


@pytest.fixture(scope="session")
def small_corpus() -> LabeledCorpus:
    return make_corpus(n_positive=220, n_negative=380, seed=7)


@pytest.fixture(scope="session")
def small_split(small_corpus):
    return stratified_split(small_corpus, SplitSpec(test_fraction=0.25, seed=3))
