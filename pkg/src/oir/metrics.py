"""Clustering quality metrics: NMI, ARI, and Hungarian-matched accuracy.

All three are invariant under relabeling of either partition. Implemented
directly from the contingency table so the conventions are pinned: NMI uses
natural logs with sqrt(H*H) normalization, ARI the permutation-model adjusted
index, accuracy an optimal one-to-one cluster-to-label matching.
"""
from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .clustering import ClusterAssignment
from .errors import MissingGold


def contingency_table(a: Sequence, b: Sequence) -> np.ndarray:
    """Joint count matrix over the distinct values of two equal-length labelings."""
    if len(a) != len(b):
        raise ValueError("labelings have different lengths")
    vals_a = {v: i for i, v in enumerate(sorted(set(a), key=str))}
    vals_b = {v: i for i, v in enumerate(sorted(set(b), key=str))}
    table = np.zeros((len(vals_a), len(vals_b)), dtype=np.int64)
    for x, y in zip(a, b):
        table[vals_a[x], vals_b[y]] += 1
    return table


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(a: Sequence, b: Sequence) -> float:
    """I(U;V) / sqrt(H(U) * H(V)), natural logs.

    1.0 when both partitions are the same single cluster; 0.0 when either
    entropy is zero otherwise.
    """
    table = contingency_table(a, b)
    n = int(table.sum())
    if n == 0:
        raise ValueError("empty labelings")
    if table.shape == (1, 1):
        return 1.0
    row = table.sum(axis=1)
    col = table.sum(axis=0)
    h_a = _entropy(row, n)
    h_b = _entropy(col, n)
    if h_a == 0.0 or h_b == 0.0:
        return 0.0
    nz = table > 0
    pij = table[nz] / n
    outer = np.outer(row, col)[nz] / (n * n)
    mi = float((pij * np.log(pij / outer)).sum())
    return max(0.0, min(1.0, mi / math.sqrt(h_a * h_b)))


def ari(a: Sequence, b: Sequence) -> float:
    """Adjusted Rand index under the permutation null model.

    Degenerate cases where the expected and maximum index coincide (both
    partitions trivial in the same way) score 1.0.
    """
    table = contingency_table(a, b)
    n = int(table.sum())
    if n == 0:
        raise ValueError("empty labelings")
    sum_ij = sum(math.comb(int(v), 2) for v in table.flat)
    sum_a = sum(math.comb(int(v), 2) for v in table.sum(axis=1))
    sum_b = sum(math.comb(int(v), 2) for v in table.sum(axis=0))
    pairs = math.comb(n, 2)
    expected = sum_a * sum_b / pairs if pairs else 0.0
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        return 1.0
    return (sum_ij - expected) / (max_index - expected)


def hungarian_accuracy(pred: Sequence, gold: Sequence) -> float:
    """Best one-to-one cluster-to-label matching over n.

    The contingency table is zero-padded to square, so unmatched clusters
    (or labels) contribute nothing.
    """
    table = contingency_table(pred, gold)
    n = int(table.sum())
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(-padded)
    return float(padded[rows, cols].sum()) / n


def clustering_metrics(assignment: ClusterAssignment, gold: Mapping[str, str]) -> dict[str, float]:
    """Score an assignment against gold labels keyed by utterance id."""
    ids = list(assignment.assignment)
    for uid in ids:
        if uid not in gold:
            raise MissingGold(uid)
    pred = [assignment.assignment[uid] for uid in ids]
    truth = [gold[uid] for uid in ids]
    return {
        "NMI": nmi(pred, truth),
        "ARI": ari(pred, truth),
        "accuracy": hungarian_accuracy(pred, truth),
    }
