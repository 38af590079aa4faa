"""Built-in text vectorization: naive tokenizer plus a TF-IDF encoder.

The engine is embedding-agnostic; this module is the zero-dependency default
encoder. Externally produced vectors enter through
:func:`oir.embeddings.load_embeddings` instead.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import EmptyCorpus

# Unicode alphanumeric runs; underscore counts as a separator.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character.

    Deterministic and pure; empty input yields an empty list.
    """
    return _TOKEN_RE.findall(text.lower())


def l2_normalize(vector: np.ndarray) -> np.ndarray:
    """Scale to unit Euclidean norm; the zero vector is returned unchanged."""
    v = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return v.copy()
    return v / norm


@dataclass(frozen=True)
class Vocabulary:
    """Fitted TF-IDF vocabulary. Immutable; safe to share across workers."""

    terms: dict[str, int]           # term -> column index, indices 0..|terms|-1
    doc_freq: dict[str, int]        # term -> number of documents containing it
    corpus_size: int
    idf: dict[str, float] = field(repr=False)

    def __post_init__(self):
        for t, df in self.doc_freq.items():
            if not 1 <= df <= self.corpus_size:
                raise ValueError(f"doc_freq[{t!r}]={df} outside [1, {self.corpus_size}]")
        if sorted(self.terms.values()) != list(range(len(self.terms))):
            raise ValueError("term indices must be 0..|terms|-1 with no gaps")

    @property
    def dim(self) -> int:
        return len(self.terms)

    def idf_array(self) -> np.ndarray:
        out = np.zeros(self.dim)
        for term, col in self.terms.items():
            out[col] = self.idf[term]
        return out

    def to_dict(self) -> dict:
        ordered = sorted(self.terms, key=self.terms.__getitem__)
        return {
            "terms": ordered,
            "doc_freq": [self.doc_freq[t] for t in ordered],
            "idf": [self.idf[t] for t in ordered],
            "corpus_size": self.corpus_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        terms = {t: i for i, t in enumerate(d["terms"])}
        doc_freq = dict(zip(d["terms"], d["doc_freq"]))
        idf = dict(zip(d["terms"], d["idf"]))
        return cls(terms=terms, doc_freq=doc_freq, corpus_size=d["corpus_size"], idf=idf)


def fit_tfidf(corpus: Iterable[str], min_df: int = 1) -> Vocabulary:
    """Fit a vocabulary over tokenized documents.

    Uses the smooth-idf convention idf(t) = ln((1+N)/(1+df(t))) + 1, which keeps
    every weight strictly positive. Terms appearing in fewer than ``min_df``
    documents are dropped. Raises :class:`EmptyCorpus` when no document has any
    token.
    """
    doc_freq: dict[str, int] = {}
    n_docs = 0
    for text in corpus:
        tokens = set(tokenize(text))
        if not tokens:
            continue
        n_docs += 1
        for t in tokens:
            doc_freq[t] = doc_freq.get(t, 0) + 1
    if n_docs == 0:
        raise EmptyCorpus("corpus has no non-empty documents")
    kept = sorted(t for t, df in doc_freq.items() if df >= min_df)
    terms = {t: i for i, t in enumerate(kept)}
    idf = {t: math.log((1 + n_docs) / (1 + doc_freq[t])) + 1.0 for t in kept}
    return Vocabulary(
        terms=terms,
        doc_freq={t: doc_freq[t] for t in kept},
        corpus_size=n_docs,
        idf=idf,
    )


def embed_tfidf(text: str, vocab: Vocabulary) -> np.ndarray:
    """Encode one utterance as an L2-normalized count*idf vector.

    Out-of-vocabulary tokens are ignored; an all-zero raw vector is returned
    as-is rather than normalized.
    """
    v = np.zeros(vocab.dim)
    for token in tokenize(text):
        col = vocab.terms.get(token)
        if col is not None:
            v[col] += vocab.idf[token]
    return l2_normalize(v)


class TfidfEncoder(BaseEstimator, TransformerMixin):
    """sklearn-style wrapper around :func:`fit_tfidf` / :func:`embed_tfidf`.

    ``fit`` learns the vocabulary from raw strings; ``transform`` maps raw
    strings to a dense (n, dim) float64 matrix of unit (or zero) rows.
    """

    def __init__(self, min_df: int = 1):
        self.min_df = min_df

    def fit(self, X: Sequence[str], y=None) -> "TfidfEncoder":
        self.vocabulary_ = fit_tfidf(X, min_df=self.min_df)
        return self

    def transform(self, X: Sequence[str]) -> np.ndarray:
        if not hasattr(self, "vocabulary_"):
            raise AttributeError("TfidfEncoder is not fitted")
        if len(X) == 0:
            return np.zeros((0, self.vocabulary_.dim))
        return np.stack([embed_tfidf(text, self.vocabulary_) for text in X])
