"""Label canonicalization: make equivalent intent labels compare equal.

Generated labels for one intent vary by plurality ("book_flights"), wording
("purchase_ticket") and token position ("flight_book"). Canonical form is
singular, synonym-mapped, lexicographically sorted tokens, so all of those
collapse to one key.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

from .errors import EmptyLabel, LexiconError
from .text import tokenize


@lru_cache(maxsize=65536)
def singularize(token: str) -> str:
    """Naive pattern singularization; idempotent.

    Rules in order: -ies -> -y, -ves -> -f, -ses -> -s (only for -sses/-uses,
    so -se plurals like "responses" take the bare-s rule instead and stay
    idempotent), then a bare -s strip for tokens longer than 3 characters not
    ending in -ss/-us/-is.
    """
    if not token.endswith("s"):  # every rule strips a trailing s
        return token
    if token.endswith("ies"):
        return token[:-3] + "y"
    if token.endswith("ves"):
        return token[:-3] + "f"
    if token.endswith(("sses", "uses")):
        return token[:-2]
    if (
        token.endswith("s")
        and len(token) > 3
        and not token.endswith(("ss", "us", "is"))
    ):
        return token[:-1]
    return token


@dataclass(frozen=True)
class SynonymLexicon:
    """term -> canonical term map; canonical terms map to themselves."""

    canonical_of: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for term, canon in self.canonical_of.items():
            if term != term.lower() or canon != canon.lower():
                raise LexiconError(f"synonym entry {term!r} -> {canon!r} is not lowercase")
            if self.canonical_of.get(canon, canon) != canon:
                raise LexiconError(f"canonical term {canon!r} does not map to itself")

    def map(self, token: str) -> str:
        return self.canonical_of.get(token, token)


def load_synonyms(path) -> SynonymLexicon:
    """Load a two-column TSV (term, canonical).

    Rejects rows violating the self-canonical invariant, or whose canonical
    term is not a fixed point of singularize-then-map (which would break
    canonicalization idempotence), with their line numbers.
    """
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise LexiconError("expected two tab-separated columns", line_no)
            term, canon = parts
            if term != term.lower() or canon != canon.lower():
                raise LexiconError(f"entry {term!r} -> {canon!r} is not lowercase", line_no)
            if term in mapping and mapping[term] != canon:
                raise LexiconError(f"conflicting mapping for {term!r}", line_no)
            mapping[term] = canon
    for line_no, (term, canon) in enumerate(mapping.items()):
        if mapping.get(canon, canon) != canon:
            raise LexiconError(f"canonical term {canon!r} does not map to itself")
        if mapping.get(singularize(canon), singularize(canon)) != canon:
            raise LexiconError(f"canonical term {canon!r} is not canonicalization-stable")
    return SynonymLexicon(canonical_of=mapping)


class CanonicalLabel(NamedTuple):
    """Singular, synonym-mapped tokens in sorted order (by construction)."""

    tokens: tuple[str, ...]
    display: str


_NO_SYNONYMS = SynonymLexicon()


def canonicalize_label(label: Sequence[str], synlex: SynonymLexicon | None = None) -> CanonicalLabel:
    """Singularize and synonym-map each token, then sort and deduplicate.

    Deterministic and idempotent; token order in the input never matters, so
    "flight_book" and "book_flights" canonicalize identically.
    """
    if not label:
        raise EmptyLabel("cannot canonicalize an empty label")
    lookup = (synlex or _NO_SYNONYMS).canonical_of.get
    if len(label) == 2:  # action_object labels dominate; skip the general path
        a = singularize(label[0])
        b = singularize(label[1])
        a = lookup(a, a)
        b = lookup(b, b)
        if a > b:
            a, b = b, a
        if a == b:
            return CanonicalLabel(tokens=(a,), display=a)
        return CanonicalLabel(tokens=(a, b), display=a + "_" + b)
    mapped = sorted(lookup(s, s) for s in map(singularize, label))
    tokens: list[str] = []
    for t in mapped:
        if not tokens or tokens[-1] != t:
            tokens.append(t)
    return CanonicalLabel(tokens=tuple(tokens), display="_".join(tokens))


def _label_tokens(label: str | Sequence[str]) -> list[str]:
    return tokenize(label) if isinstance(label, str) else list(label)


def merge_labels(
    labels: Iterable[str | Sequence[str]], synlex: SynonymLexicon | None = None
) -> dict[str, list]:
    """Partition labels by canonical form.

    Keys are canonical displays in first-seen order; each group keeps its
    members in input order.
    """
    groups: dict[str, list] = {}
    for label in labels:
        key = canonicalize_label(_label_tokens(label), synlex).display
        groups.setdefault(key, []).append(label)
    return groups
