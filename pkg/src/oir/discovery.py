"""Intent discovery on top of the clustering primitives: alignment across
rounds, centroid-seeded refinement, and cluster-count estimation."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .clustering import (
    AUTO,
    ClusterAssignment,
    ClusteringConfig,
    KMeansClusterer,
    _to_assignment,
    agglomerative,
    gmm_em,
    kmeans,
)
from .embeddings import EmbeddingMatrix
from .errors import IdSetMismatch, KMismatch


@dataclass(frozen=True)
class AlignmentMap:
    """Bijection from current cluster indices to previous ones."""

    permutation: dict[int, int]
    overlap: int

    def apply(self, cluster: int) -> int:
        return self.permutation[cluster]


def align_assignments(prev: ClusterAssignment, curr: ClusterAssignment) -> AlignmentMap:
    """Match cluster indices across two runs over the same utterances.

    Solves the k x k contingency matrix with the Hungarian algorithm, so the
    returned permutation maximizes the number of ids landing in the same
    (relabeled) cluster.
    """
    if prev.k_effective != curr.k_effective:
        raise KMismatch(f"k {prev.k_effective} vs {curr.k_effective}")
    prev_ids = set(prev.assignment)
    curr_ids = set(curr.assignment)
    if prev_ids != curr_ids:
        raise IdSetMismatch("assignments cover different utterance ids")
    k = prev.k_effective
    table = np.zeros((k, k), dtype=np.int64)
    for uid, c in curr.assignment.items():
        table[c, prev.assignment[uid]] += 1
    rows, cols = linear_sum_assignment(-table)
    permutation = {int(r): int(c) for r, c in zip(rows, cols)}
    overlap = int(table[rows, cols].sum())
    return AlignmentMap(permutation=permutation, overlap=overlap)


def _relabel(assignment: ClusterAssignment, mapping: AlignmentMap) -> ClusterAssignment:
    inverse = np.empty(assignment.k_effective, dtype=np.int64)
    for curr, prev in mapping.permutation.items():
        inverse[prev] = curr
    return ClusterAssignment(
        assignment={uid: mapping.apply(c) for uid, c in assignment.assignment.items()},
        k_effective=assignment.k_effective,
        centroids=assignment.centroids[inverse],
        objective=assignment.objective,
        iterations=assignment.iterations,
        seed_used=assignment.seed_used,
    )


@dataclass(frozen=True)
class RefinementResult:
    assignment: ClusterAssignment
    stability: list[float]  # fraction of ids unchanged, one entry per round after the first
    rounds_run: int


def refine_clusters(X: EmbeddingMatrix, config: ClusteringConfig) -> RefinementResult:
    """Aligned re-clustering: k-means re-seeded from the previous centroids.

    Each round after the first starts Lloyd from the previous round's
    centroids, aligns the fresh labels back to the previous round, and stops
    early once the assignment no longer changes.
    """
    if config.refine_rounds < 1:
        raise ValueError("refine_rounds must be >= 1")
    ids = X.ids()
    matrix = X.matrix()
    current = kmeans(X, config)
    stability: list[float] = []
    rounds = 1
    for _ in range(config.refine_rounds - 1):
        est = KMeansClusterer(
            k=current.k_effective, seed=config.seed, max_iter=config.max_iter,
            tol=config.tol, restarts=config.restarts,
        ).init_from(matrix, current.centroids)
        fresh = _to_assignment(
            ids, est.labels_, est.cluster_centers_, est.inertia_,
            est.n_iter_, est.seed_used_, est.k_effective_,
        )
        rounds += 1
        if fresh.k_effective != current.k_effective:
            # a cluster emptied out under re-seeding; accept the shrunk result
            current = fresh
            stability.append(0.0)
            continue
        mapping = align_assignments(current, fresh)
        aligned = _relabel(fresh, mapping)
        unchanged = sum(
            1 for uid in ids if aligned.assignment[uid] == current.assignment[uid]
        )
        stability.append(unchanged / len(ids))
        changed = unchanged < len(ids)
        current = aligned
        if not changed:
            break
    return RefinementResult(assignment=current, stability=stability, rounds_run=rounds)


def estimate_k(X: EmbeddingMatrix, k_max: int, threshold: float = 0.5,
               config: ClusteringConfig | None = None) -> int:
    """Over-cluster with k_max, then count clusters that kept at least
    threshold * (n / k_max) points; at least 1."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if len(X) < k_max:
        raise ValueError(f"k_max {k_max} exceeds point count {len(X)}")
    base = config or ClusteringConfig(method="kmeans", k=k_max)
    result = kmeans(X, base.with_k(k_max))
    sizes = np.zeros(k_max, dtype=np.int64)
    sizes[: result.k_effective] = result.sizes()
    cutoff = threshold * (len(X) / k_max)
    return max(1, int((sizes >= cutoff).sum()))


def export_assignment(
    assignment: ClusterAssignment,
    config: ClusteringConfig,
    jsonl_path: str | os.PathLike,
    manifest_path: str | os.PathLike | None = None,
) -> None:
    """Write an assignment as JSONL rows {"id", "cluster"} plus a run
    manifest (config echo, objective, iterations, seed_used)."""
    with open(jsonl_path, "w", encoding="utf-8") as f:
        for uid, cluster in assignment.assignment.items():
            f.write(json.dumps({"id": uid, "cluster": int(cluster)}))
            f.write("\n")
    if manifest_path is not None:
        manifest = {
            "config": asdict(config),
            "k_effective": assignment.k_effective,
            "objective": assignment.objective,
            "iterations": assignment.iterations,
            "seed_used": assignment.seed_used,
        }
        with open(manifest_path, "w", encoding="utf-8") as f:
            json.dump(manifest, f, sort_keys=True, indent=2)
            f.write("\n")


def cluster_embeddings(X: EmbeddingMatrix, config: ClusteringConfig,
                       k_max: int | None = None, threshold: float = 0.5) -> ClusterAssignment:
    """Dispatch on config.method, resolving k=AUTO through estimate_k first."""
    cfg = config
    if cfg.k == AUTO:
        cap = k_max if k_max is not None else min(len(X), 20)
        cfg = cfg.with_k(estimate_k(X, cap, threshold=threshold, config=cfg))
    if cfg.method == "kmeans":
        if cfg.refine_rounds >= 1:
            return refine_clusters(X, cfg).assignment
        return kmeans(X, cfg)
    if cfg.method == "gmm":
        return gmm_em(X, cfg)
    return agglomerative(X, cfg)
