"""Deterministic synthetic corpus of SQL payloads for tests and offline runs.

Mimics the makeup of public SQLi detection datasets: negatives are a mix of
benign SQL statements, natural-language sentences, and form-field values;
positives cover the classic injection families (tautologies, UNION pulls,
stacked queries, timing probes, error-based extraction, comment obfuscation).
Everything is a pure function of the seed.
"""

from __future__ import annotations

import random
from typing import Callable

from .corpus import LabeledCorpus

DEFAULT_POSITIVES = 11341
DEFAULT_NEGATIVES = 19268

_TABLES = ["users", "orders", "products", "accounts", "sessions", "payments",
           "customers", "logs", "inventory", "employees", "articles", "messages"]
_COLUMNS = ["id", "name", "email", "price", "status", "created_at", "total",
            "username", "title", "quantity", "address", "phone", "role"]
_VALUES = ["active", "pending", "shipped", "admin", "guest", "new", "blue",
           "london", "alice", "bob", "error", "ok"]
_WORDS = ["please", "update", "the", "report", "for", "our", "customer", "and",
          "send", "a", "copy", "to", "billing", "team", "today", "thanks",
          "meeting", "notes", "from", "last", "week", "are", "attached", "kindly",
          "review", "order", "status", "before", "shipping", "new", "items",
          "we", "will", "discuss", "results", "of", "this", "quarter", "at",
          "monday", "standup", "her", "flight", "lands", "in", "paris", "tonight"]
_NAMES = ["alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi",
          "o'brien", "d'angelo", "n'diaye"]
_FUNCS = ["version()", "database()", "user()", "current_user()", "@@version"]


def _kw(rng: random.Random, word: str) -> str:
    """Randomize keyword casing: upper, lower, or capitalized."""
    roll = rng.random()
    if roll < 0.5:
        return word.upper()
    if roll < 0.85:
        return word.lower()
    return word.capitalize()


def _num(rng: random.Random) -> int:
    return rng.randint(0, 9999)


def _comment(rng: random.Random) -> str:
    return rng.choice(["--", "-- ", "--+", "#", "-- -", ""])


def _sp(rng: random.Random) -> str:
    """A token separator; occasionally an inline comment instead of a space."""
    roll = rng.random()
    if roll < 0.85:
        return " "
    if roll < 0.95:
        return "  "
    return "/**/"


# -- negative (benign) families ----------------------------------------------

def _benign_select(rng: random.Random) -> str:
    cols = ", ".join(rng.sample(_COLUMNS, rng.randint(1, 3)))
    table = rng.choice(_TABLES)
    q = f"{_kw(rng, 'select')} {cols} {_kw(rng, 'from')} {table}"
    if rng.random() < 0.7:
        col = rng.choice(_COLUMNS)
        if rng.random() < 0.5:
            q += f" {_kw(rng, 'where')} {col} = {_num(rng)}"
        else:
            q += f" {_kw(rng, 'where')} {col} = '{rng.choice(_VALUES)}'"
    if rng.random() < 0.25:
        q += f" {_kw(rng, 'order by')} {rng.choice(_COLUMNS)}"
    if rng.random() < 0.2:
        q += f" {_kw(rng, 'limit')} {rng.randint(1, 100)}"
    return q


def _benign_dml(rng: random.Random) -> str:
    table = rng.choice(_TABLES)
    if rng.random() < 0.5:
        cols = rng.sample(_COLUMNS, 2)
        return (f"{_kw(rng, 'insert into')} {table} ({cols[0]}, {cols[1]}) "
                f"{_kw(rng, 'values')} ({_num(rng)}, '{rng.choice(_VALUES)}')")
    col = rng.choice(_COLUMNS)
    return (f"{_kw(rng, 'update')} {table} {_kw(rng, 'set')} {col} = "
            f"'{rng.choice(_VALUES)}' {_kw(rng, 'where')} id = {_num(rng)}")


def _benign_sentence(rng: random.Random) -> str:
    n = rng.randint(4, 12)
    words = [rng.choice(_WORDS) for _ in range(n)]
    sentence = " ".join(words)
    if rng.random() < 0.3:
        sentence = sentence.capitalize() + rng.choice([".", "", "!", "?"])
    return sentence


def _benign_form_value(rng: random.Random) -> str:
    roll = rng.random()
    if roll < 0.4:
        return rng.choice(_NAMES)
    if roll < 0.7:
        return f"{rng.choice(_NAMES)}{_num(rng)}@{rng.choice(['mail', 'web', 'corp'])}.com"
    if roll < 0.85:
        return str(_num(rng))
    # benign text that mentions SQL-ish words without attack structure
    return rng.choice(["union of states", "select few", "drop me a line",
                       "where or when", "insert coin to play", "null and void"])


_NEGATIVE_FAMILIES: list[tuple[float, Callable[[random.Random], str]]] = [
    (0.40, _benign_sentence),
    (0.30, _benign_select),
    (0.12, _benign_dml),
    (0.18, _benign_form_value),
]


# -- positive (attack) families ----------------------------------------------

def _attack_tautology(rng: random.Random) -> str:
    n = _num(rng)
    quote = rng.choice(["'", '"'])
    forms = [
        f"{quote}{_sp(rng)}{_kw(rng, 'or')}{_sp(rng)}{n}={n}{_sp(rng)}{_comment(rng)}",
        f"{rng.choice(_VALUES)}{quote}{_sp(rng)}{_kw(rng, 'or')}{_sp(rng)}{quote}a{quote}={quote}a",
        f"{quote}{_sp(rng)}{_kw(rng, 'or')}{_sp(rng)}{quote}1{quote}={quote}1{quote}{_sp(rng)}{_comment(rng)}",
        f"{_kw(rng, 'admin')}{quote}{_comment(rng)}",
        f"{n}{_sp(rng)}{_kw(rng, 'or')}{_sp(rng)}{n}={n}",
        f"{quote}) {_kw(rng, 'or')} ({quote}1{quote}={quote}1",
    ]
    return rng.choice(forms)


def _attack_union(rng: random.Random) -> str:
    nulls = ", ".join(["NULL"] * rng.randint(1, 5))
    cols = ", ".join(rng.sample(_COLUMNS, 2))
    table = rng.choice(_TABLES)
    forms = [
        f"'{_sp(rng)}{_kw(rng, 'union')}{_sp(rng)}{_kw(rng, 'select')}{_sp(rng)}{cols}{_sp(rng)}{_kw(rng, 'from')}{_sp(rng)}{table}{_sp(rng)}{_comment(rng)}",
        f"{_num(rng)}{_sp(rng)}{_kw(rng, 'union')}{_sp(rng)}{_kw(rng, 'all')}{_sp(rng)}{_kw(rng, 'select')}{_sp(rng)}{nulls}{_sp(rng)}{_comment(rng)}",
        f"'{_sp(rng)}{_kw(rng, 'union')}{_sp(rng)}{_kw(rng, 'select')}{_sp(rng)}{rng.choice(_FUNCS)}, {nulls}{_comment(rng)}",
    ]
    return rng.choice(forms)


def _attack_stacked(rng: random.Random) -> str:
    table = rng.choice(_TABLES)
    forms = [
        f"{_num(rng)}';{_sp(rng)}{_kw(rng, 'drop table')} {table};{_sp(rng)}{_comment(rng)}",
        f"';{_sp(rng)}{_kw(rng, 'delete from')} {table};{_sp(rng)}{_comment(rng)}",
        f"1;{_sp(rng)}{_kw(rng, 'exec')} xp_cmdshell('{rng.choice(['dir', 'whoami', 'net user'])}'){_sp(rng)}{_comment(rng)}",
        f"';{_sp(rng)}{_kw(rng, 'insert into')} {table} {_kw(rng, 'values')} ({_num(rng)});{_comment(rng)}",
    ]
    return rng.choice(forms)


def _attack_timing(rng: random.Random) -> str:
    secs = rng.randint(1, 9)
    forms = [
        f"'{_sp(rng)}{_kw(rng, 'or')}{_sp(rng)}{_kw(rng, 'sleep')}({secs}){_sp(rng)}{_comment(rng)}",
        f"';{_sp(rng)}{_kw(rng, 'waitfor delay')} '0:0:{secs}'{_sp(rng)}{_comment(rng)}",
        f"'{_sp(rng)}{_kw(rng, 'and')}{_sp(rng)}{_kw(rng, 'benchmark')}({secs}000000,MD5({_num(rng)})){_comment(rng)}",
        f"{_num(rng)}'{_sp(rng)}{_kw(rng, 'and')}{_sp(rng)}{_kw(rng, 'if')}({_num(rng)}={_num(rng)},{_kw(rng, 'sleep')}({secs}),0){_comment(rng)}",
    ]
    return rng.choice(forms)


def _attack_error_based(rng: random.Random) -> str:
    func = rng.choice(_FUNCS)
    forms = [
        f"'{_sp(rng)}{_kw(rng, 'and')}{_sp(rng)}extractvalue(1,concat(0x7e,{func})){_sp(rng)}{_comment(rng)}",
        f"'{_sp(rng)}{_kw(rng, 'and')}{_sp(rng)}updatexml(1,concat(0x7e,{func}),1){_comment(rng)}",
        f"'{_sp(rng)}{_kw(rng, 'and')}{_sp(rng)}{_kw(rng, 'cast')}({func} {_kw(rng, 'as')} int)={_num(rng)}{_comment(rng)}",
    ]
    return rng.choice(forms)


def _attack_blind(rng: random.Random) -> str:
    n = _num(rng)
    forms = [
        f"{n}'{_sp(rng)}{_kw(rng, 'and')}{_sp(rng)}substring(@@version,1,1)='{rng.randint(4, 9)}",
        f"'{_sp(rng)}{_kw(rng, 'and')}{_sp(rng)}{n}={n + rng.randint(1, 9)}{_sp(rng)}{_kw(rng, 'union')}{_sp(rng)}{_kw(rng, 'select')} NULL{_comment(rng)}",
        f"{n}{_sp(rng)}{_kw(rng, 'and')}{_sp(rng)}ascii(substr(({_kw(rng, 'select')} {rng.choice(_COLUMNS)} {_kw(rng, 'from')} {rng.choice(_TABLES)}),1,1))>{rng.randint(32, 126)}",
    ]
    return rng.choice(forms)


_POSITIVE_FAMILIES: list[tuple[float, Callable[[random.Random], str]]] = [
    (0.30, _attack_tautology),
    (0.22, _attack_union),
    (0.14, _attack_stacked),
    (0.12, _attack_timing),
    (0.10, _attack_error_based),
    (0.12, _attack_blind),
]


def _draw(rng: random.Random, families: list[tuple[float, Callable[[random.Random], str]]]) -> str:
    roll = rng.random()
    acc = 0.0
    for weight, fn in families:
        acc += weight
        if roll < acc:
            return fn(rng)
    return families[-1][1](rng)


def benign_payload(rng: random.Random) -> str:
    return _draw(rng, _NEGATIVE_FAMILIES)


def attack_payload(rng: random.Random) -> str:
    return _draw(rng, _POSITIVE_FAMILIES)


def make_corpus(n_positive: int = DEFAULT_POSITIVES, n_negative: int = DEFAULT_NEGATIVES,
                seed: int = 0) -> LabeledCorpus:
    """Build a labelled corpus with exact class counts, shuffled, seed-deterministic."""
    rng = random.Random(seed)
    rows = [(attack_payload(rng), 1) for _ in range(n_positive)]
    rows += [(benign_payload(rng), 0) for _ in range(n_negative)]
    rng.shuffle(rows)
    return LabeledCorpus.from_pairs(rows, source_id=f"synthetic(seed={seed})")


def attack_stream(source: LabeledCorpus, n: int, attack_fraction: float = 0.033,
                  seed: int = 0) -> LabeledCorpus:
    """Sample a traffic-like stream from an existing corpus.

    Draws with replacement: each payload is an attack with probability
    ``attack_fraction``, otherwise benign.  Used to exercise the cascade
    under a realistic attack prior.
    """
    positives = [p for p, y in zip(source.payloads, source.labels) if y == 1]
    negatives = [p for p, y in zip(source.payloads, source.labels) if y == 0]
    if not positives or not negatives:
        raise ValueError("source corpus must contain both classes")
    rng = random.Random(seed)
    rows = []
    for _ in range(n):
        if rng.random() < attack_fraction:
            rows.append((rng.choice(positives), 1))
        else:
            rows.append((rng.choice(negatives), 0))
    return LabeledCorpus.from_pairs(rows, source_id=f"{source.source_id}#stream(seed={seed})")
