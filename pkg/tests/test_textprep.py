from __future__ import annotations

from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqlicascade.textprep import Termizer, char_ngrams, char_termizer, word_termizer, word_tokens

SAMPLE = "SELECT * FROM users WHERE name = 'admin'--' AND password = ''"


def test_monograms_of_sample_payload():
    grams = char_ngrams(SAMPLE, 1)
    assert grams[:3] == ["S", "E", "L"]
    assert len(grams) == len(SAMPLE)


def test_bigrams_of_sample_payload():
    grams = char_ngrams(SAMPLE, 2)
    assert grams[:3] == ["SE", "EL", "LE"]
    assert len(grams) == len(SAMPLE) - 1


def test_trigrams_of_sample_payload():
    assert char_ngrams(SAMPLE, 3)[:3] == ["SEL", "ELE", "LEC"]


def test_ngrams_shorter_payload_gives_empty():
    assert char_ngrams("ab", 3) == []
    assert char_ngrams("", 1) == []


def test_ngrams_reject_bad_n():
    with pytest.raises(ValueError):
        char_ngrams("abc", 0)


def test_unicode_monograms_are_scalar_values():
    assert char_ngrams("héllo", 1) == ["h", "é", "l", "l", "o"]


@settings(max_examples=80, deadline=None)
@given(payload=st.text(max_size=40), n=st.integers(1, 5))
def test_window_count(payload, n):
    grams = char_ngrams(payload, n)
    assert len(grams) == max(0, len(payload) - n + 1)
    assert all(len(g) == n for g in grams)


@settings(max_examples=80, deadline=None)
@given(payload=st.text(max_size=60))
def test_monogram_character_conservation(payload):
    assert Counter(char_ngrams(payload, 1)) == Counter(payload)


def test_word_tokens_basic():
    assert word_tokens("SELECT * FROM users") == ["select", "*", "from", "users"]


def test_word_tokens_empty():
    assert word_tokens("") == []


def test_word_tokens_punctuation_runs_stay_whole():
    assert word_tokens("name='admin'--") == ["name", "='", "admin", "'--"]


def test_word_tokens_case_preserved_when_requested():
    assert word_tokens("SELECT x", lowercase=False) == ["SELECT", "x"]


@settings(max_examples=80, deadline=None)
@given(payload=st.text(max_size=60), lowercase=st.booleans())
def test_word_tokens_idempotent_under_rejoin(payload, lowercase):
    tokens = word_tokens(payload, lowercase=lowercase)
    assert word_tokens(" ".join(tokens), lowercase=lowercase) == tokens


def test_termizer_char_scheme():
    t = char_termizer(2)
    assert t.terms("SEL") == ["SE", "EL"]
    assert t.lowercase is False  # char schemes keep case by default


def test_termizer_word_scheme_defaults_to_lowercase():
    t = word_termizer()
    assert t.lowercase is True
    assert t.terms("SELECT A") == ["select", "a"]


def test_termizer_lowercased_char_scheme():
    t = char_termizer(1, lowercase=True)
    assert t.terms("Ab") == ["a", "b"]


def test_termizer_validation():
    with pytest.raises(ValueError):
        Termizer(scheme="bogus")
    with pytest.raises(ValueError):
        Termizer(scheme="char_ngram", n=0)


def test_termizer_dict_roundtrip():
    t = char_termizer(3)
    assert Termizer.from_dict(t.to_dict()) == t
    w = word_termizer(lowercase=False)
    assert Termizer.from_dict(w.to_dict()) == w
