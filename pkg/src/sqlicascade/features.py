"""Document-term matrices and the sparse feature families built from them.

Feature families over a termization scheme:

* raw   -- occurrence counts (bag-of-characters / bag-of-words when the
           termizer is char-monogram / word)
* tf    -- counts normalized by each document's own term total
* tfidf -- tf scaled per term by ln((N+1)/(df+1)), idf frozen at fit time

All matrices are CSR-style: per-row sorted column indices with nonzero
values only.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import LabeledCorpus
from .textprep import Termizer

RAW = "raw"
TF = "tf"
TFIDF = "tfidf"
SCHEMES = (RAW, TF, TFIDF)

PIPELINE_FORMAT = "sqlicascade.feature_pipeline"
PIPELINE_VERSION = 1


@dataclass(frozen=True)
class SparseVector:
    """One document's features: sorted unique column indices with nonzero values."""

    dim: int
    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray  # float64, nonzero

    def __post_init__(self) -> None:
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.indices.shape != self.values.shape:
            raise ValueError("indices and values must align")

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def sq_norm(self) -> float:
        return float(np.dot(self.values, self.values))

    @staticmethod
    def zeros(dim: int) -> "SparseVector":
        return SparseVector(dim, np.empty(0, dtype=np.int64), np.empty(0))

    @staticmethod
    def from_dense(arr: Sequence[float]) -> "SparseVector":
        dense = np.asarray(arr, dtype=np.float64)
        idx = np.flatnonzero(dense)
        return SparseVector(dense.size, idx.astype(np.int64), dense[idx])


class SparseMatrix:
    """Row-major sparse document-term matrix (coordinate-unique, nonzero entries)."""

    __slots__ = ("rows", "cols", "indptr", "indices", "data")

    def __init__(self, rows: int, cols: int, indptr: np.ndarray, indices: np.ndarray,
                 data: np.ndarray):
        self.rows = int(rows)
        self.cols = int(cols)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        if self.indptr.size != self.rows + 1:
            raise ValueError("indptr must have rows+1 entries")
        if self.indices.size != self.data.size or self.indices.size != self.indptr[-1]:
            raise ValueError("indices/data size must equal indptr[-1]")

    @property
    def nnz(self) -> int:
        return int(self.data.size)

    def row(self, i: int) -> SparseVector:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return SparseVector(self.cols, self.indices[lo:hi].copy(), self.data[lo:hi].copy())

    def row_slices(self) -> Iterable[tuple[np.ndarray, np.ndarray]]:
        """Yield (indices, values) views per row; cheap iteration for training loops."""
        for i in range(self.rows):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            yield self.indices[lo:hi], self.data[lo:hi]

    def entries(self) -> Iterable[tuple[int, int, float]]:
        for i in range(self.rows):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            for j, v in zip(self.indices[lo:hi], self.data[lo:hi]):
                yield i, int(j), float(v)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        row_ids = np.repeat(np.arange(self.rows), np.diff(self.indptr))
        out[row_ids, self.indices] = self.data
        return out

    def row_sums(self) -> np.ndarray:
        sums = np.zeros(self.rows)
        row_ids = np.repeat(np.arange(self.rows), np.diff(self.indptr))
        np.add.at(sums, row_ids, self.data)
        return sums

    @staticmethod
    def from_rows(rows: Sequence[SparseVector]) -> "SparseMatrix":
        if not rows:
            raise ValueError("need at least one row")
        cols = rows[0].dim
        if any(r.dim != cols for r in rows):
            raise ValueError("all rows must share a dimension")
        counts = np.array([r.nnz for r in rows], dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        indices = (np.concatenate([r.indices for r in rows])
                   if rows else np.empty(0, dtype=np.int64))
        data = np.concatenate([r.values for r in rows]) if rows else np.empty(0)
        return SparseMatrix(len(rows), cols, indptr, indices, data)


@dataclass(frozen=True)
class Vocabulary:
    """Deterministic term -> column map: distinct corpus terms, sorted."""

    terms: tuple[str, ...]
    termizer: Termizer

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.terms)})

    @property
    def index(self) -> dict[str, int]:
        return self._index  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class IdfVector:
    """Per-term inverse document frequency, frozen at fit time."""

    values: np.ndarray
    corpus_size: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    def __len__(self) -> int:
        return int(self.values.size)


def build_vocabulary(corpus: LabeledCorpus, termizer: Termizer,
                     min_df: int = 1) -> Vocabulary:
    """Collect the distinct terms of a corpus under a termizer, sorted.

    ``min_df`` optionally prunes terms appearing in fewer documents; the
    default keeps everything.
    """
    if len(corpus) == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    df: Counter[str] = Counter()
    for payload in corpus.payloads:
        df.update(set(termizer.terms(payload)))
    kept = [t for t, n in df.items() if n >= min_df]
    if not kept:
        raise ValueError("corpus produced zero terms under this termizer")
    return Vocabulary(terms=tuple(sorted(kept)), termizer=termizer)


def _count_row(payload: str, vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    """Column indices and multiplicities for one document; OOV terms dropped."""
    index = vocab.index
    cols: list[int] = []
    vals: list[float] = []
    for term, count in Counter(vocab.termizer.terms(payload)).items():
        j = index.get(term)
        if j is not None:
            cols.append(j)
            vals.append(float(count))
    if not cols:
        return np.empty(0, dtype=np.int64), np.empty(0)
    order = np.argsort(np.asarray(cols, dtype=np.int64), kind="stable")
    return np.asarray(cols, dtype=np.int64)[order], np.asarray(vals)[order]


def count_matrix(corpus: LabeledCorpus, vocab: Vocabulary) -> SparseMatrix:
    """Occurrence matrix: entry (d, t) is the multiplicity of term t in document d."""
    indptr = np.zeros(len(corpus) + 1, dtype=np.int64)
    all_cols: list[np.ndarray] = []
    all_vals: list[np.ndarray] = []
    for i, payload in enumerate(corpus.payloads):
        cols, vals = _count_row(payload, vocab)
        all_cols.append(cols)
        all_vals.append(vals)
        indptr[i + 1] = indptr[i] + cols.size
    indices = np.concatenate(all_cols) if all_cols else np.empty(0, dtype=np.int64)
    data = np.concatenate(all_vals) if all_vals else np.empty(0)
    return SparseMatrix(len(corpus), len(vocab), indptr, indices, data)


def tf_normalize(counts: SparseMatrix) -> SparseMatrix:
    """Divide each row by its own sum; all-zero rows stay all-zero."""
    sums = counts.row_sums()
    denom = np.where(sums > 0, sums, 1.0)
    scale = np.repeat(1.0 / denom, np.diff(counts.indptr))
    return SparseMatrix(counts.rows, counts.cols, counts.indptr.copy(),
                        counts.indices.copy(), counts.data * scale)


def document_frequency(counts: SparseMatrix) -> np.ndarray:
    """df(t): number of documents with a nonzero entry in column t."""
    return np.bincount(counts.indices, minlength=counts.cols).astype(np.int64)


def idf(df: np.ndarray, corpus_size: int) -> IdfVector:
    """Smoothed inverse document frequency, ln((N+1)/(df+1)).

    Natural log; the base only rescales every idf uniformly.  A term present
    in every document gets exactly 0.
    """
    df = np.asarray(df, dtype=np.float64)
    if np.any(df > corpus_size):
        raise ValueError("df exceeds corpus size; upstream counts are corrupt")
    values = np.log((corpus_size + 1.0) / (df + 1.0))
    return IdfVector(values=values, corpus_size=int(corpus_size))


def _drop_zeros(rows: int, cols: int, indptr: np.ndarray, indices: np.ndarray,
                data: np.ndarray) -> SparseMatrix:
    keep = data != 0.0
    if keep.all():
        return SparseMatrix(rows, cols, indptr, indices, data)
    row_ids = np.repeat(np.arange(rows), np.diff(indptr))
    kept_per_row = np.bincount(row_ids[keep], minlength=rows)
    new_indptr = np.concatenate([[0], np.cumsum(kept_per_row)])
    return SparseMatrix(rows, cols, new_indptr, indices[keep], data[keep])


def tfidf(counts: SparseMatrix, idf_vec: IdfVector) -> SparseMatrix:
    """TF-IDF weighting: row-normalized counts, each column scaled by its idf.

    At inference the training-time idf is reused on the new rows.  Columns of
    all-document terms (idf exactly 0) vanish from the result.
    """
    if len(idf_vec) != counts.cols:
        raise ValueError(f"idf has {len(idf_vec)} terms but matrix has {counts.cols} columns")
    tf = tf_normalize(counts)
    data = tf.data * idf_vec.values[tf.indices]
    return _drop_zeros(tf.rows, tf.cols, tf.indptr, tf.indices, data)


def vectorize(payload: str, vocab: Vocabulary, scheme: str = TFIDF,
              idf_vec: IdfVector | None = None) -> SparseVector:
    """Single-payload analogue of the matrix pipeline; OOV terms dropped."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == TFIDF and idf_vec is None:
        raise ValueError("tfidf vectorization needs the fitted idf")
    cols, vals = _count_row(payload, vocab)
    if scheme == RAW or cols.size == 0:
        return SparseVector(len(vocab), cols, vals)
    vals = vals / vals.sum()
    if scheme == TFIDF:
        assert idf_vec is not None
        if len(idf_vec) != len(vocab):
            raise ValueError("idf vector does not match vocabulary size")
        vals = vals * idf_vec.values[cols]
        keep = vals != 0.0
        cols, vals = cols[keep], vals[keep]
    return SparseVector(len(vocab), cols, vals)


def concat_features(parts: Sequence[SparseVector]) -> SparseVector:
    """Block-concatenate feature vectors; offsets shift by cumulative widths."""
    if not parts:
        raise ValueError("need at least one part")
    dim = sum(p.dim for p in parts)
    indices: list[np.ndarray] = []
    values: list[np.ndarray] = []
    offset = 0
    for p in parts:
        indices.append(p.indices + offset)
        values.append(p.values)
        offset += p.dim
    return SparseVector(dim, np.concatenate(indices), np.concatenate(values))


def hconcat(parts: Sequence[SparseMatrix]) -> SparseMatrix:
    """Column-wise concatenation of matrices with equal row counts."""
    if not parts:
        raise ValueError("need at least one part")
    rows = parts[0].rows
    if any(m.rows != rows for m in parts):
        raise ValueError("all parts must have the same number of rows")
    return SparseMatrix.from_rows(
        [concat_features([m.row(i) for m in parts]) for i in range(rows)]
    )


class FeaturePipeline:
    """A fitted (termizer, scheme) feature extractor with frozen idf.

    Vocabulary and idf are fitted on training data only; ``transform`` and
    ``transform_payload`` then reuse them on any input.
    """

    def __init__(self, termizer: Termizer, scheme: str = TFIDF):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        self.termizer = termizer
        self.scheme = scheme
        self.vocab: Vocabulary | None = None
        self.idf: IdfVector | None = None

    @property
    def fitted(self) -> bool:
        return self.vocab is not None

    @property
    def dim(self) -> int:
        self._require_fitted()
        assert self.vocab is not None
        return len(self.vocab)

    def describe(self) -> str:
        return f"{self.scheme}-{self.termizer.describe()}"

    def _require_fitted(self) -> None:
        if self.vocab is None:
            raise RuntimeError("pipeline is not fitted")

    def fit(self, corpus: LabeledCorpus) -> "FeaturePipeline":
        self.vocab = build_vocabulary(corpus, self.termizer)
        if self.scheme == TFIDF:
            counts = count_matrix(corpus, self.vocab)
            self.idf = idf(document_frequency(counts), len(corpus))
        return self

    def fit_transform(self, corpus: LabeledCorpus) -> SparseMatrix:
        self.vocab = build_vocabulary(corpus, self.termizer)
        counts = count_matrix(corpus, self.vocab)
        if self.scheme == RAW:
            return counts
        if self.scheme == TF:
            return tf_normalize(counts)
        self.idf = idf(document_frequency(counts), len(corpus))
        return tfidf(counts, self.idf)

    def transform(self, corpus: LabeledCorpus) -> SparseMatrix:
        self._require_fitted()
        assert self.vocab is not None
        counts = count_matrix(corpus, self.vocab)
        if self.scheme == RAW:
            return counts
        if self.scheme == TF:
            return tf_normalize(counts)
        assert self.idf is not None
        return tfidf(counts, self.idf)

    def transform_payload(self, payload: str) -> SparseVector:
        self._require_fitted()
        assert self.vocab is not None
        return vectorize(payload, self.vocab, self.scheme, self.idf)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        self._require_fitted()
        assert self.vocab is not None
        doc = {
            "format": PIPELINE_FORMAT,
            "version": PIPELINE_VERSION,
            "termizer": self.termizer.to_dict(),
            "scheme": self.scheme,
            "terms": list(self.vocab.terms),
            "idf": None if self.idf is None else self.idf.values.tolist(),
            "corpus_size": None if self.idf is None else self.idf.corpus_size,
        }
        # repr-based float encoding round-trips float64 exactly
        return json.dumps(doc, ensure_ascii=False)

    @staticmethod
    def from_json(text: str) -> "FeaturePipeline":
        doc = json.loads(text)
        if doc.get("format") != PIPELINE_FORMAT:
            raise ValueError(f"not a feature pipeline document: {doc.get('format')!r}")
        if doc.get("version") != PIPELINE_VERSION:
            raise ValueError(f"unsupported pipeline version {doc.get('version')!r}")
        pipe = FeaturePipeline(Termizer.from_dict(doc["termizer"]), doc["scheme"])
        pipe.vocab = Vocabulary(terms=tuple(doc["terms"]), termizer=pipe.termizer)
        if doc["idf"] is not None:
            pipe.idf = IdfVector(np.asarray(doc["idf"], dtype=np.float64),
                                 int(doc["corpus_size"]))
        return pipe

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @staticmethod
    def load(path: str | Path) -> "FeaturePipeline":
        return FeaturePipeline.from_json(Path(path).read_text(encoding="utf-8"))

    def pipeline_id(self) -> str:
        """Stable content hash used to reference this pipeline from model files."""
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()[:16]


# -- named feature-family presets --------------------------------------------
#
# The classic families: raw counts over characters (boc) or words (bow),
# document-normalized counts (tf-*), and idf-weighted n-gram features
# (tfidf-char1..3, tfidf-word).

def _family_specs() -> dict[str, tuple[Termizer, str]]:
    from .textprep import char_termizer, word_termizer

    return {
        "boc": (char_termizer(1), RAW),
        "bow": (word_termizer(), RAW),
        "tf-char1": (char_termizer(1), TF),
        "tf-word": (word_termizer(), TF),
        "tfidf-char1": (char_termizer(1), TFIDF),
        "tfidf-char2": (char_termizer(2), TFIDF),
        "tfidf-char3": (char_termizer(3), TFIDF),
        "tfidf-word": (word_termizer(), TFIDF),
    }


FEATURE_FAMILY_NAMES = tuple(_family_specs().keys())


def family_pipeline(name: str) -> FeaturePipeline:
    """Fresh, unfitted pipeline for a named feature family."""
    specs = _family_specs()
    if name not in specs:
        raise ValueError(f"unknown feature family {name!r}; known: {sorted(specs)}")
    termizer, scheme = specs[name]
    return FeaturePipeline(termizer, scheme)
