"""Cluster label generation: rule-based action-object extraction with a
two-keyword fallback.

The subject of a customer-support utterance is always the customer, so an
intent reduces to a (verb root, noun) pair. Extraction is lexicon-driven and
fully deterministic; no parser models are involved.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyCluster, LexiconError, NoContent
from .text import Vocabulary, embed_tfidf, tokenize

_CONSONANTS = frozenset("bcdfghjklmnpqrtvwxz")  # 's' excluded: keep 'miss', 'pass'

LEXICON_SECTIONS = ("#verbs", "#verb_roots", "#auxiliaries", "#stopwords", "#nouns")


@dataclass(frozen=True)
class Lexicon:
    """Flat lexicon backing verb rooting and pair extraction.

    Immutable after load; auxiliaries and verbs are disjoint by invariant.
    """

    verbs: frozenset[str]
    verb_roots: dict[str, str] = field(repr=False)
    auxiliaries: frozenset[str] = frozenset()
    stopwords: frozenset[str] = frozenset()
    noun_hints: frozenset[str] = frozenset()

    def __post_init__(self):
        overlap = self.verbs & self.auxiliaries
        if overlap:
            raise LexiconError(f"auxiliaries and verbs overlap: {sorted(overlap)[:5]}")
        for group in (self.verbs, self.auxiliaries, self.stopwords, self.noun_hints):
            for w in group:
                if w != w.lower():
                    raise LexiconError(f"lexicon entry {w!r} is not lowercase")
        for k, v in self.verb_roots.items():
            if k != k.lower() or v != v.lower():
                raise LexiconError(f"verb_roots entry {k!r} -> {v!r} is not lowercase")


def parse_lexicon(lines: Iterable[str]) -> Lexicon:
    verbs: set[str] = set()
    verb_roots: dict[str, str] = {}
    auxiliaries: set[str] = set()
    stopwords: set[str] = set()
    nouns: set[str] = set()
    section = None
    buckets = {
        "#verbs": verbs,
        "#auxiliaries": auxiliaries,
        "#stopwords": stopwords,
        "#nouns": nouns,
    }
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("//"):
            continue
        if line.startswith("#"):
            if line not in LEXICON_SECTIONS:
                raise LexiconError(f"unknown section {line!r}", line_no)
            section = line
            continue
        if section is None:
            raise LexiconError("entry before any section header", line_no)
        if section == "#verb_roots":
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise LexiconError("verb_roots rows need two tab-separated columns", line_no)
            verb_roots[parts[0]] = parts[1]
        else:
            if "\t" in line:
                raise LexiconError(f"unexpected tab in {section} entry", line_no)
            buckets[section].add(line)
    return Lexicon(
        verbs=frozenset(verbs),
        verb_roots=verb_roots,
        auxiliaries=frozenset(auxiliaries),
        stopwords=frozenset(stopwords),
        noun_hints=frozenset(nouns),
    )


def load_lexicon(path) -> Lexicon:
    with open(path, encoding="utf-8") as f:
        return parse_lexicon(f)


_default_lexicon: Lexicon | None = None


def default_lexicon() -> Lexicon:
    """The bundled starter lexicon (~200 support-domain verbs)."""
    global _default_lexicon
    if _default_lexicon is None:
        text = resources.files("oir.data").joinpath("lexicon.tsv").read_text(encoding="utf-8")
        _default_lexicon = parse_lexicon(text.splitlines())
    return _default_lexicon


def normalize_verb(token: str, lexicon: Lexicon) -> str:
    """Reduce an inflected verb to its root.

    Lexicon lookup wins; otherwise suffix rules fire in order: -ies -> -y,
    -ing stripped (remainder >= 3, doubled trailing consonant collapsed, as in
    booking -> book), -ed stripped (remainder >= 3), -s stripped (but not -ss).
    """
    root = lexicon.verb_roots.get(token)
    if root is not None:
        return root
    if token.endswith("ies"):
        return token[:-3] + "y"
    if token.endswith("ing") and len(token) - 3 >= 3:
        rest = token[:-3]
        if len(rest) >= 2 and rest[-1] == rest[-2] and rest[-1] in _CONSONANTS:
            rest = rest[:-1]
        return rest
    if token.endswith("ed") and len(token) - 2 >= 3:
        return token[:-2]
    if token.endswith("s") and not token.endswith("ss"):
        return token[:-1]
    return token


@dataclass(frozen=True)
class ActionObjectPair:
    action: str  # verb root
    object: str  # raw noun token

    def as_tuple(self) -> tuple[str, str]:
        return (self.action, self.object)


def extract_action_object(tokens: Sequence[str], lexicon: Lexicon) -> list[ActionObjectPair]:
    """Scan left to right for (action verb, object) pairs.

    Auxiliaries and stopwords never start a pair. The object is the nearest
    following token that is neither a stopword nor a verb in its raw form
    (verb rooting applies to the action slot only, so "booking" still works
    as a noun object). Scanning resumes after each object; an action with no
    object yields nothing.
    """
    pairs: list[ActionObjectPair] = []
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if tok in lexicon.auxiliaries or tok in lexicon.stopwords:
            i += 1
            continue
        root = normalize_verb(tok, lexicon)
        if root not in lexicon.verbs:
            i += 1
            continue
        j = i + 1
        obj = None
        while j < n:
            cand = tokens[j]
            if cand in lexicon.stopwords or cand in lexicon.verbs:
                j += 1
                continue
            obj = cand
            break
        if obj is None:
            break
        pairs.append(ActionObjectPair(action=root, object=obj))
        i = j + 1
    return pairs


@dataclass(frozen=True)
class ClusterLabel:
    tokens: list[str]
    confidence: float
    source: str  # "pair" | "keywords"

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0,1]")
        if self.source == "pair" and len(self.tokens) != 2:
            raise ValueError("pair labels carry exactly two tokens")
        if self.source == "keywords" and not 1 <= len(self.tokens) <= 2:
            raise ValueError("keyword labels carry one or two tokens")

    @property
    def display(self) -> str:
        return "_".join(self.tokens)


def keyword_label(
    cluster_texts: Sequence[str],
    centroid: np.ndarray,
    vocab: Vocabulary,
    stopwords: frozenset[str] = frozenset(),
) -> ClusterLabel:
    """Two-keyword fallback label.

    Tokens are scored by cluster term frequency times idf (ties broken
    lexicographically); confidence is the cosine between the TF-IDF embedding
    of the joined keywords and the cluster centroid, clamped to [0, 1].
    """
    if not cluster_texts:
        raise EmptyCluster("keyword_label got an empty cluster")
    tf: Counter[str] = Counter()
    for text in cluster_texts:
        for tok in tokenize(text):
            if tok not in stopwords and tok in vocab.terms:
                tf[tok] += 1
    if not tf:
        raise NoContent("cluster has no scorable (non-stopword, in-vocabulary) tokens")
    ranked = sorted(tf.items(), key=lambda kv: (-kv[1] * vocab.idf[kv[0]], kv[0]))
    tokens = [tok for tok, _ in ranked[:2]]
    vec = embed_tfidf(" ".join(tokens), vocab)
    c = np.asarray(centroid, dtype=np.float64)
    denom = float(np.linalg.norm(vec) * np.linalg.norm(c))
    confidence = 0.0 if denom == 0.0 else float(np.dot(vec, c) / denom)
    return ClusterLabel(tokens=tokens, confidence=min(1.0, max(0.0, confidence)), source="keywords")


def label_cluster(
    cluster_texts: Sequence[str],
    pairs_per_utterance: Sequence[Sequence[ActionObjectPair]],
    centroid: np.ndarray | None = None,
    vocab: Vocabulary | None = None,
    stopwords: frozenset[str] = frozenset(),
) -> ClusterLabel:
    """Label a cluster by its most-represented action-object pair.

    Each utterance counts a given pair at most once, so the confidence
    (top-pair count / cluster size) stays in [0, 1] and hits 1.0 exactly when
    every utterance yields the winning pair. Count ties break to the
    lexicographically smaller pair. Clusters with no pairs at all fall back to
    :func:`keyword_label`, which needs ``centroid`` and ``vocab``.
    """
    if not cluster_texts:
        raise EmptyCluster("label_cluster got an empty cluster")
    counts: Counter[tuple[str, str]] = Counter()
    for pairs in pairs_per_utterance:
        for pair in {p.as_tuple() for p in pairs}:
            counts[pair] += 1
    if not counts:
        if centroid is None or vocab is None:
            raise NoContent("no pairs extracted and no vocabulary for keyword fallback")
        return keyword_label(cluster_texts, centroid, vocab, stopwords)
    (action, obj), top = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ClusterLabel(
        tokens=[action, obj],
        confidence=top / len(cluster_texts),
        source="pair",
    )
