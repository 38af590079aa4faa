"""Utterance and embedding-matrix types plus their JSONL file formats.

Embedding file grammar: UTF-8 JSONL, one object per line with keys exactly
"id" (string) and "vector" (array of finite numbers). Utterance files carry
"id", "text" and an optional "label".
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DimMismatch, DuplicateId, EmptyBatch, ParseError


@dataclass(frozen=True)
class Utterance:
    """One transcribed customer request."""

    id: str
    text: str
    gold_label: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("utterance id must be non-empty")
        if not self.text.strip():
            raise ValueError(f"utterance {self.id!r} has empty text")


def parse_utterance_obj(obj: dict, line_no: int) -> Utterance:
    if not isinstance(obj, dict):
        raise ParseError(line_no, "expected a JSON object")
    uid = obj.get("id")
    text = obj.get("text")
    if not isinstance(uid, str) or not uid:
        raise ParseError(line_no, 'missing or empty "id"')
    if not isinstance(text, str) or not text.strip():
        raise ParseError(line_no, 'missing or empty "text"')
    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        raise ParseError(line_no, '"label" must be a string when present')
    return Utterance(id=uid, text=text, gold_label=label)


def read_utterances(lines: Iterable[str]) -> list[Utterance]:
    """Parse utterance JSONL; enforces unique non-empty ids."""
    out: list[Utterance] = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(line_no, f"invalid JSON: {e.msg}") from e
        utt = parse_utterance_obj(obj, line_no)
        if utt.id in seen:
            raise DuplicateId(utt.id, line_no)
        seen.add(utt.id)
        out.append(utt)
    if not out:
        raise EmptyBatch("no utterances in input")
    return out


def load_utterances(path: str | os.PathLike) -> list[Utterance]:
    with open(path, encoding="utf-8") as f:
        return read_utterances(f)


class EmbeddingMatrix:
    """Dense real vectors keyed by utterance id; one shared dimension.

    Immutable after construction; rows keep insertion order.
    """

    def __init__(self, rows: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]]):
        items = rows.items() if isinstance(rows, Mapping) else rows
        self._rows: dict[str, np.ndarray] = {}
        self.dim = -1
        for uid, vec in items:
            v = np.asarray(vec, dtype=np.float64)
            if v.ndim != 1:
                raise ValueError(f"row {uid!r} is not a 1-d vector")
            if self.dim < 0:
                self.dim = v.shape[0]
            elif v.shape[0] != self.dim:
                raise DimMismatch(self.dim, v.shape[0], f"row {uid!r}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"row {uid!r} has non-finite values")
            if uid in self._rows:
                raise DuplicateId(uid)
            v.flags.writeable = False
            self._rows[uid] = v
        if self.dim < 0:
            self.dim = 0

    def __len__(self) -> int:
        return len(self._rows)

    def __contains__(self, uid: str) -> bool:
        return uid in self._rows

    def __getitem__(self, uid: str) -> np.ndarray:
        return self._rows[uid]

    def get(self, uid: str) -> np.ndarray | None:
        return self._rows.get(uid)

    def ids(self) -> list[str]:
        return list(self._rows)

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self._rows.items())

    def matrix(self, order: list[str] | None = None) -> np.ndarray:
        """Stack rows into an (n, dim) array, in ``order`` or insertion order."""
        ids = order if order is not None else self.ids()
        if not ids:
            return np.zeros((0, self.dim))
        return np.stack([self._rows[uid] for uid in ids])

    def subset(self, ids: Iterable[str]) -> "EmbeddingMatrix":
        return EmbeddingMatrix((uid, self._rows[uid]) for uid in ids)


def load_embeddings(path: str | os.PathLike) -> EmbeddingMatrix:
    """Load an embedding JSONL file.

    Raises :class:`ParseError` with the offending line number,
    :class:`DimMismatch` when a row's length differs from the first row,
    and :class:`DuplicateId` on a repeated id.
    """
    rows: dict[str, np.ndarray] = {}
    dim = -1
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(line_no, f"invalid JSON: {e.msg}") from e
            if not isinstance(obj, dict) or "id" not in obj or "vector" not in obj:
                raise ParseError(line_no, 'expected object with "id" and "vector"')
            uid = obj["id"]
            vec = obj["vector"]
            if not isinstance(uid, str) or not uid:
                raise ParseError(line_no, '"id" must be a non-empty string')
            if not isinstance(vec, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in vec
            ):
                raise ParseError(line_no, '"vector" must be an array of numbers')
            if not all(math.isfinite(x) for x in vec):
                raise ParseError(line_no, "vector has non-finite values")
            if dim < 0:
                dim = len(vec)
            elif len(vec) != dim:
                raise DimMismatch(dim, len(vec), f"line {line_no}")
            if uid in rows:
                raise DuplicateId(uid, line_no)
            rows[uid] = np.asarray(vec, dtype=np.float64)
    return EmbeddingMatrix(rows)


def save_embeddings(matrix: EmbeddingMatrix, path: str | os.PathLike) -> None:
    """Write the matrix in the JSONL grammar; round-trips bit-exactly."""
    with open(path, "w", encoding="utf-8") as f:
        for uid, vec in matrix.items():
            f.write(json.dumps({"id": uid, "vector": [float(x) for x in vec]}))
            f.write("\n")
