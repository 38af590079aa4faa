import itertools

import numpy as np
import pytest

import json

from oir.clustering import AUTO, ClusterAssignment, ClusteringConfig, kmeans
from oir.discovery import (
    align_assignments,
    cluster_embeddings,
    estimate_k,
    export_assignment,
    refine_clusters,
)
from oir.embeddings import EmbeddingMatrix
from oir.errors import IdSetMismatch, KMismatch


def as_matrix(X):
    return EmbeddingMatrix({f"u{i}": row for i, row in enumerate(np.atleast_2d(X))})


def assignment_of(mapping, k=None):
    k = k if k is not None else len(set(mapping.values()))
    return ClusterAssignment(
        assignment=dict(mapping), k_effective=k, centroids=np.zeros((k, 2)),
        objective=0.0, iterations=1, seed_used=0,
    )


def duplicate_blobs(centers, n_per):
    """Blobs of exactly repeated points (zero within-blob variance)."""
    rows = {}
    i = 0
    for c in centers:
        for _ in range(n_per):
            rows[f"u{i}"] = np.asarray(c, dtype=float)
            i += 1
    return EmbeddingMatrix(rows)


class TestAlignAssignments:
    def test_identity(self):
        a = assignment_of({"a": 0, "b": 0, "c": 1, "d": 1})
        mapping = align_assignments(a, a)
        assert mapping.permutation == {0: 0, 1: 1}
        assert mapping.overlap == 4

    def test_swap(self):
        prev = assignment_of({"a": 0, "b": 0, "c": 1, "d": 1})
        curr = assignment_of({"a": 1, "b": 1, "c": 0, "d": 0})
        mapping = align_assignments(prev, curr)
        assert mapping.permutation == {0: 1, 1: 0}
        assert mapping.overlap == 4

    def test_matches_brute_force_on_random_fixture(self):
        rng = np.random.default_rng(3)
        ids = [f"u{i}" for i in range(30)]
        prev = assignment_of({u: int(rng.integers(0, 3)) for u in ids}, k=3)
        curr = assignment_of({u: int(rng.integers(0, 3)) for u in ids}, k=3)
        mapping = align_assignments(prev, curr)
        best = 0
        for perm in itertools.permutations(range(3)):
            overlap = sum(
                1 for u in ids if perm[curr.assignment[u]] == prev.assignment[u]
            )
            best = max(best, overlap)
        assert mapping.overlap == best

    def test_k_mismatch(self):
        with pytest.raises(KMismatch):
            align_assignments(
                assignment_of({"a": 0, "b": 1}), assignment_of({"a": 0, "b": 0})
            )

    def test_id_set_mismatch(self):
        with pytest.raises(IdSetMismatch):
            align_assignments(
                assignment_of({"a": 0, "b": 1}), assignment_of({"a": 0, "c": 1})
            )

    def test_relabeling_gives_full_overlap(self):
        rng = np.random.default_rng(4)
        ids = [f"u{i}" for i in range(40)]
        base = {u: int(rng.integers(0, 4)) for u in ids}
        perm = [2, 3, 1, 0]
        prev = assignment_of(base, k=4)
        curr = assignment_of({u: perm[c] for u, c in base.items()}, k=4)
        assert align_assignments(prev, curr).overlap == len(ids)


class TestRefineClusters:
    def test_stability_hits_one_by_round_two(self):
        X = duplicate_blobs([(0.0, 0.0), (10.0, 0.0), (5.0, 8.0)], 30)
        cfg = ClusteringConfig(k=3, seed=0, refine_rounds=4)
        result = refine_clusters(X, cfg)
        assert result.stability and result.stability[0] == 1.0
        assert result.rounds_run <= 2

    def test_one_round_equals_kmeans(self):
        rng = np.random.default_rng(8)
        m = as_matrix(rng.standard_normal((30, 2)))
        cfg = ClusteringConfig(k=3, seed=1, refine_rounds=1)
        refined = refine_clusters(m, cfg)
        plain = kmeans(m, cfg)
        assert refined.assignment.assignment == plain.assignment
        assert refined.stability == []

    def test_stability_non_decreasing_on_fixed_seed(self):
        rng = np.random.default_rng(9)
        X = np.vstack([rng.standard_normal((25, 2)), rng.standard_normal((25, 2)) + 6.0])
        cfg = ClusteringConfig(k=2, seed=2, refine_rounds=5)
        result = refine_clusters(as_matrix(X), cfg)
        assert all(b >= a - 1e-12 for a, b in zip(result.stability, result.stability[1:]))

    def test_requires_rounds(self):
        with pytest.raises(ValueError):
            refine_clusters(as_matrix(np.zeros((3, 1))), ClusteringConfig(k=1, refine_rounds=0))


class TestEstimateK:
    def test_three_separable_blobs(self):
        X = duplicate_blobs([(0.0, 0.0), (10.0, 0.0), (5.0, 8.66)], 50)
        assert estimate_k(X, 10, config=ClusteringConfig(k=10, seed=0)) == 3

    def test_identical_points(self):
        X = duplicate_blobs([(1.0, 1.0)], 40)
        assert estimate_k(X, 5, config=ClusteringConfig(k=5, seed=0)) == 1

    def test_threshold_zero_keeps_k_max(self):
        rng = np.random.default_rng(10)
        X = as_matrix(rng.standard_normal((50, 2)))
        assert estimate_k(X, 6, threshold=0.0, config=ClusteringConfig(k=6, seed=0)) == 6

    def test_k_max_bounds(self):
        X = duplicate_blobs([(0.0, 0.0)], 3)
        with pytest.raises(ValueError):
            estimate_k(X, 4)


class TestExportAssignment:
    def test_jsonl_and_manifest(self, tmp_path):
        X = duplicate_blobs([(0.0, 0.0), (9.0, 0.0)], 5)
        cfg = ClusteringConfig(k=2, seed=4)
        result = kmeans(X, cfg)
        jsonl = tmp_path / "assign.jsonl"
        manifest = tmp_path / "run.json"
        export_assignment(result, cfg, jsonl, manifest)

        rows = [json.loads(line) for line in jsonl.read_text().splitlines()]
        assert {r["id"] for r in rows} == set(result.assignment)
        assert all(isinstance(r["cluster"], int) for r in rows)

        doc = json.loads(manifest.read_text())
        assert doc["config"]["seed"] == 4
        assert doc["seed_used"] == result.seed_used
        assert doc["objective"] == result.objective
        assert doc["iterations"] == result.iterations


class TestClusterEmbeddings:
    def test_auto_k_resolution(self):
        X = duplicate_blobs([(0.0, 0.0), (10.0, 0.0)], 25)
        cfg = ClusteringConfig(method="kmeans", k=AUTO, seed=0)
        result = cluster_embeddings(X, cfg, k_max=10)
        assert result.k_effective == 2

    @pytest.mark.parametrize("method", ["kmeans", "gmm", "agglomerative"])
    def test_dispatch(self, method):
        rng = np.random.default_rng(11)
        X = np.vstack([rng.standard_normal((15, 2)), rng.standard_normal((15, 2)) + 8.0])
        cfg = ClusteringConfig(method=method, k=2, seed=0)
        result = cluster_embeddings(as_matrix(X), cfg)
        assert result.k_effective == 2
        sizes = sorted(result.sizes().tolist())
        assert sizes == [15, 15]
