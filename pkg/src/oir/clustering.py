"""Deterministic clustering over embedding matrices.

Three methods: Lloyd k-means with k-means++ seeding and restarts, a
diagonal-covariance Gaussian mixture fit by EM, and bottom-up agglomerative
merging. Every run is a pure function of (data, config): all randomness flows
from the config seed, restart i uses seed+i, and every tie-break is pinned.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .embeddings import EmbeddingMatrix
from .errors import TooFewPoints

AUTO = "auto"

METHODS = ("kmeans", "gmm", "agglomerative")
LINKAGES = ("average", "complete", "single")


@dataclass(frozen=True)
class ClusteringConfig:
    method: str = "kmeans"
    k: int | str = AUTO
    seed: int = 0
    max_iter: int = 300
    tol: float = 1e-6
    restarts: int = 10
    linkage: str = "average"
    refine_rounds: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.k != AUTO and (not isinstance(self.k, int) or self.k < 1):
            raise ValueError(f"k must be a positive integer or {AUTO!r}, got {self.k!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative 64-bit integer")
        if self.linkage not in LINKAGES:
            raise ValueError(f"linkage must be one of {LINKAGES}, got {self.linkage!r}")

    def with_k(self, k: int) -> "ClusteringConfig":
        return replace(self, k=k)


@dataclass(frozen=True)
class ClusterAssignment:
    """Result of one clustering run; cluster indices are 0..k_effective-1
    with no empty cluster."""

    assignment: dict[str, int]
    k_effective: int
    centroids: np.ndarray = field(repr=False)
    objective: float
    iterations: int
    seed_used: int

    def labels_for(self, ids: Sequence[str]) -> np.ndarray:
        return np.asarray([self.assignment[u] for u in ids], dtype=np.int64)

    def cluster_members(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {c: [] for c in range(self.k_effective)}
        for uid, c in self.assignment.items():
            out[c].append(uid)
        return out

    def sizes(self) -> np.ndarray:
        counts = np.zeros(self.k_effective, dtype=np.int64)
        for c in self.assignment.values():
            counts[c] += 1
        return counts


# --- k-means ----------------------------------------------------------------


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding. When every remaining D^2 is zero (duplicate-only
    data) the lowest-index point is taken, keeping the run deterministic."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[int(rng.integers(n))]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = 0
        else:
            r = rng.random() * total
            idx = min(int(np.searchsorted(np.cumsum(d2), r, side="right")), n - 1)
        centers[i] = X[idx]
        d2 = np.minimum(d2, ((X - centers[i]) ** 2).sum(axis=1))
    return centers


def _repair_empty(X, labels, centers, dist2):
    """Reseed each empty cluster to the point farthest from its own centroid.

    Unfixable clusters (all residual distances zero) stay empty and are
    compacted out of the final result.
    """
    k = centers.shape[0]
    point_d2 = dist2[np.arange(X.shape[0]), labels].copy()
    sizes = np.bincount(labels, minlength=k)
    for j in range(k):
        if sizes[j] > 0:
            continue
        far = int(np.argmax(point_d2))
        if point_d2[far] <= 0.0:
            continue
        sizes[labels[far]] -= 1
        labels[far] = j
        sizes[j] = 1
        centers[j] = X[far]
        point_d2[far] = 0.0
    return labels, centers


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int, tol: float):
    """Lloyd iterations until the max centroid shift drops below tol.

    Returns (labels, centers, sse, iterations, sse_history). History values
    are evaluated after each assignment+update round and are non-increasing.
    """
    centers = centers.copy()
    k = centers.shape[0]
    labels = np.zeros(X.shape[0], dtype=np.int64)
    history: list[float] = []
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        dist2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = dist2.argmin(axis=1)  # ties: lowest cluster index
        labels, centers = _repair_empty(X, labels, centers, dist2)
        old = centers.copy()
        for j in range(k):
            members = X[labels == j]
            if members.shape[0]:
                centers[j] = members.mean(axis=0)
        sse = float(((X - centers[labels]) ** 2).sum())
        history.append(sse)
        if float(np.linalg.norm(centers - old, axis=1).max()) < tol:
            break
    return labels, centers, history[-1], iterations, history


def _compact(labels: np.ndarray, centers: np.ndarray):
    """Drop empty clusters, renumbering survivors in ascending index order."""
    occupied = np.unique(labels)
    remap = {int(old): new for new, old in enumerate(occupied)}
    new_labels = np.asarray([remap[int(c)] for c in labels], dtype=np.int64)
    return new_labels, centers[occupied], len(occupied)


class KMeansClusterer(BaseEstimator, ClusterMixin):
    """Lloyd k-means, best of ``restarts`` seeded runs by SSE.

    Restart i draws its k-means++ seeds from ``seed + i``; ties in SSE go to
    the lower restart index, so refits are bit-reproducible.
    """

    def __init__(self, k: int = 8, seed: int = 0, max_iter: int = 300,
                 tol: float = 1e-6, restarts: int = 10):
        self.k = k
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self.restarts = restarts

    def fit(self, X, y=None) -> "KMeansClusterer":
        X = check_array(X, dtype=np.float64)
        if X.shape[0] < self.k:
            raise TooFewPoints(X.shape[0], self.k)
        best = None
        for i in range(self.restarts):
            rng = np.random.default_rng(self.seed + i)
            init = _kmeans_pp_init(X, self.k, rng)
            labels, centers, sse, iters, history = _lloyd(X, init, self.max_iter, self.tol)
            if best is None or sse < best[0]:
                best = (sse, i, labels, centers, iters, history)
        sse, i, labels, centers, iters, history = best
        labels, centers, k_eff = _compact(labels, centers)
        self.labels_ = labels
        self.cluster_centers_ = centers
        self.inertia_ = sse
        self.n_iter_ = iters
        self.sse_history_ = history
        self.seed_used_ = self.seed + i
        self.k_effective_ = k_eff
        return self

    def init_from(self, X, centers: np.ndarray) -> "KMeansClusterer":
        """Single Lloyd run from explicit initial centers (no restarts)."""
        X = check_array(X, dtype=np.float64)
        if X.shape[0] < centers.shape[0]:
            raise TooFewPoints(X.shape[0], centers.shape[0])
        labels, out_centers, sse, iters, history = _lloyd(
            X, np.asarray(centers, dtype=np.float64), self.max_iter, self.tol
        )
        labels, out_centers, k_eff = _compact(labels, out_centers)
        self.labels_ = labels
        self.cluster_centers_ = out_centers
        self.inertia_ = sse
        self.n_iter_ = iters
        self.sse_history_ = history
        self.seed_used_ = self.seed
        self.k_effective_ = k_eff
        return self


# --- Gaussian mixture -------------------------------------------------------

_VAR_FLOOR = 1e-6


class DiagonalGaussianMixture(BaseEstimator, ClusterMixin):
    """Diagonal-covariance mixture fit by EM, initialized from k-means.

    Responsibilities are computed through log-sum-exp; per-dimension variances
    are floored at 1e-6 (the floored M-step is still the constrained maximizer,
    so the log-likelihood stays non-decreasing). Hard assignment by maximum
    responsibility, ties to the lower component index.
    """

    def __init__(self, k: int = 8, seed: int = 0, max_iter: int = 300,
                 tol: float = 1e-6, restarts: int = 10):
        self.k = k
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self.restarts = restarts

    def _log_prob(self, X):
        # (n, k) log of weight_j * N(x | mean_j, diag var_j)
        log_det = np.log(2 * np.pi * self.variances_).sum(axis=1)
        maha = (
            ((X[:, None, :] - self.means_[None, :, :]) ** 2) / self.variances_[None, :, :]
        ).sum(axis=2)
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights_)
        return log_w[None, :] - 0.5 * (log_det[None, :] + maha)

    def fit(self, X, y=None) -> "DiagonalGaussianMixture":
        X = check_array(X, dtype=np.float64)
        n = X.shape[0]
        if n < self.k:
            raise TooFewPoints(n, self.k)
        km = KMeansClusterer(
            k=self.k, seed=self.seed, max_iter=self.max_iter,
            tol=self.tol, restarts=self.restarts,
        ).fit(X)
        k = km.k_effective_
        self.means_ = km.cluster_centers_.copy()
        self.variances_ = np.empty_like(self.means_)
        self.weights_ = np.empty(k)
        for j in range(k):
            members = X[km.labels_ == j]
            self.variances_[j] = np.maximum(members.var(axis=0), _VAR_FLOOR)
            self.weights_[j] = members.shape[0] / n

        history: list[float] = []
        iterations = 0
        prev_ll = -np.inf
        log_resp = None
        for _ in range(self.max_iter):
            iterations += 1
            log_prob = self._log_prob(X)
            norm = logsumexp(log_prob, axis=1)
            ll = float(norm.sum())
            history.append(ll)
            log_resp = log_prob - norm[:, None]
            resp = np.exp(log_resp)
            nk = resp.sum(axis=0)
            safe_nk = np.maximum(nk, 1e-12)
            self.weights_ = nk / n
            self.means_ = (resp.T @ X) / safe_nk[:, None]
            second = (resp.T @ (X**2)) / safe_nk[:, None]
            self.variances_ = np.maximum(second - self.means_**2, _VAR_FLOOR)
            if abs(ll - prev_ll) < self.tol:
                break
            prev_ll = ll

        labels = np.asarray(log_resp.argmax(axis=1), dtype=np.int64)
        labels, means, k_eff = _compact(labels, self.means_)
        self.labels_ = labels
        self.cluster_centers_ = means
        self.k_effective_ = k_eff
        self.loglik_ = history[-1]
        self.loglik_history_ = history
        self.n_iter_ = iterations
        self.seed_used_ = km.seed_used_
        return self


# --- agglomerative ----------------------------------------------------------


class AgglomerativeClusterer(BaseEstimator, ClusterMixin):
    """Bottom-up merging under average/complete/single linkage.

    Euclidean point distances, Lance-Williams updates, and merge ties broken
    by the smallest (i, j) pair of cluster representatives (a cluster is
    represented by the smallest original point index it contains). O(n^2)
    memory and O(n^3)-ish time: desk scale only.
    """

    def __init__(self, k: int = 2, linkage: str = "average"):
        self.k = k
        self.linkage = linkage

    def fit(self, X, y=None) -> "AgglomerativeClusterer":
        if self.linkage not in LINKAGES:
            raise ValueError(f"linkage must be one of {LINKAGES}")
        X = check_array(X, dtype=np.float64)
        n = X.shape[0]
        if n < self.k:
            raise TooFewPoints(n, self.k)
        dist = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
        np.fill_diagonal(dist, np.inf)
        active = np.ones(n, dtype=bool)
        sizes = np.ones(n, dtype=np.int64)
        members: dict[int, list[int]] = {i: [i] for i in range(n)}

        for _ in range(n - self.k):
            masked = np.where(active[:, None] & active[None, :], dist, np.inf)
            best = float(masked.min())
            # ties: lexicographically smallest (i, j), i < j
            cands = np.argwhere(masked == best)
            i, j = min((int(a), int(b)) for a, b in cands if a < b)
            si, sj = sizes[i], sizes[j]
            row_i, row_j = dist[i], dist[j]
            if self.linkage == "single":
                new_row = np.minimum(row_i, row_j)
            elif self.linkage == "complete":
                new_row = np.maximum(row_i, row_j)
            else:
                new_row = (si * row_i + sj * row_j) / (si + sj)
            dist[i, :] = new_row
            dist[:, i] = new_row
            dist[i, i] = np.inf
            active[j] = False
            sizes[i] = si + sj
            members[i].extend(members.pop(j))

        roots = sorted(np.nonzero(active)[0].tolist())
        labels = np.empty(n, dtype=np.int64)
        centers = np.empty((len(roots), X.shape[1]))
        for c, root in enumerate(roots):
            idx = members[root]
            labels[idx] = c
            centers[c] = X[idx].mean(axis=0)
        self.labels_ = labels
        self.cluster_centers_ = centers
        self.k_effective_ = len(roots)
        self.inertia_ = float(((X - centers[labels]) ** 2).sum())
        self.n_iter_ = n - self.k
        return self


# --- config-driven surface over EmbeddingMatrix ------------------------------


def _require_int_k(config: ClusteringConfig) -> int:
    if config.k == AUTO:
        raise ValueError("k is AUTO; resolve it first (see oir.discovery.cluster_embeddings)")
    return int(config.k)


def _to_assignment(ids: list[str], labels, centers, objective, iterations, seed_used, k_eff):
    return ClusterAssignment(
        assignment={uid: int(c) for uid, c in zip(ids, labels)},
        k_effective=int(k_eff),
        centroids=np.asarray(centers, dtype=np.float64),
        objective=float(objective),
        iterations=int(iterations),
        seed_used=int(seed_used),
    )


def kmeans(X: EmbeddingMatrix, config: ClusteringConfig) -> ClusterAssignment:
    ids = X.ids()
    est = KMeansClusterer(
        k=_require_int_k(config), seed=config.seed, max_iter=config.max_iter,
        tol=config.tol, restarts=config.restarts,
    ).fit(X.matrix())
    return _to_assignment(
        ids, est.labels_, est.cluster_centers_, est.inertia_,
        est.n_iter_, est.seed_used_, est.k_effective_,
    )


def gmm_em(X: EmbeddingMatrix, config: ClusteringConfig) -> ClusterAssignment:
    ids = X.ids()
    est = DiagonalGaussianMixture(
        k=_require_int_k(config), seed=config.seed, max_iter=config.max_iter,
        tol=config.tol, restarts=config.restarts,
    ).fit(X.matrix())
    return _to_assignment(
        ids, est.labels_, est.cluster_centers_, est.loglik_,
        est.n_iter_, est.seed_used_, est.k_effective_,
    )


def agglomerative(X: EmbeddingMatrix, config: ClusteringConfig) -> ClusterAssignment:
    ids = X.ids()
    est = AgglomerativeClusterer(k=_require_int_k(config), linkage=config.linkage).fit(X.matrix())
    return _to_assignment(
        ids, est.labels_, est.cluster_centers_, est.inertia_,
        est.n_iter_, config.seed, est.k_effective_,
    )
