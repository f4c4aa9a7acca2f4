"""Turn raw SQL payloads into term sequences: character n-grams or word tokens."""

from __future__ import annotations

import re
from dataclasses import dataclass

# A word token is a maximal alphanumeric/underscore run; everything else that
# is not whitespace forms maximal punctuation-run tokens.  Punctuation runs are
# kept whole because markers like `'--` carry most of the attack signal.
_WORD_OR_PUNCT = re.compile(r"\w+|[^\w\s]+", re.UNICODE)

CHAR_SCHEME = "char_ngram"
WORD_SCHEME = "word"


def char_ngrams(payload: str, n: int) -> list[str]:
    """Sliding-window substrings of length ``n`` over the payload's characters.

    Operates on Unicode scalar values, so a multi-byte character is a single
    monogram term.  Returns an empty list when the payload is shorter than n.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [payload[i : i + n] for i in range(len(payload) - n + 1)]


def word_tokens(payload: str, lowercase: bool = True) -> list[str]:
    """Split a payload into word tokens and punctuation-run tokens.

    Whitespace separates tokens; each maximal run of non-word, non-space
    characters is emitted as a single token, e.g. ``name='admin'--`` gives
    ``["name", "='", "admin", "'--"]``.
    """
    tokens = _WORD_OR_PUNCT.findall(payload)
    if lowercase:
        tokens = [t.lower() for t in tokens]
    return tokens


@dataclass(frozen=True)
class Termizer:
    """A termization scheme: character n-grams (n >= 1) or word tokens.

    Character schemes preserve case by default; the word scheme folds case by
    default so keyword variants like SELECT/select merge.
    """

    scheme: str = CHAR_SCHEME
    n: int = 1
    lowercase: bool | None = None

    def __post_init__(self) -> None:
        if self.scheme not in (CHAR_SCHEME, WORD_SCHEME):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == CHAR_SCHEME and self.n < 1:
            raise ValueError(f"char_ngram needs n >= 1, got {self.n}")
        if self.lowercase is None:
            object.__setattr__(self, "lowercase", self.scheme == WORD_SCHEME)

    def terms(self, payload: str) -> list[str]:
        if self.scheme == CHAR_SCHEME:
            if self.lowercase:
                payload = payload.lower()
            return char_ngrams(payload, self.n)
        return word_tokens(payload, lowercase=bool(self.lowercase))

    def describe(self) -> str:
        if self.scheme == CHAR_SCHEME:
            return f"char{self.n}" + ("-lc" if self.lowercase else "")
        return "word" + ("-lc" if self.lowercase else "")

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "n": self.n, "lowercase": self.lowercase}

    @staticmethod
    def from_dict(d: dict) -> "Termizer":
        return Termizer(scheme=d["scheme"], n=int(d.get("n", 1)), lowercase=d.get("lowercase"))


def char_termizer(n: int, lowercase: bool = False) -> Termizer:
    return Termizer(scheme=CHAR_SCHEME, n=n, lowercase=lowercase)


def word_termizer(lowercase: bool = True) -> Termizer:
    return Termizer(scheme=WORD_SCHEME, lowercase=lowercase)
