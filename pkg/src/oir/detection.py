"""Open intent detection: class centroids with adaptive per-class boundaries.

A point is assigned to its nearest centroid when it falls inside that class's
radius, and rejected as UNKNOWN otherwise. All distances are Euclidean; on
L2-normalized vectors that ranking is monotone with cosine distance.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array

from .embeddings import EmbeddingMatrix
from .errors import (
    DegenerateScatter,
    DimMismatch,
    EmptyClass,
    LabelMismatch,
    MissingEmbedding,
    UnknownMode,
)
from .text import Vocabulary

UNKNOWN = "UNKNOWN"

MODEL_FORMAT_VERSION = 1
MODEL_METRIC = "euclidean-l2norm"

# Points beyond this many rows are strided down before the O(n^2) pairwise
# mean used for the degenerate-class radius floor.
_PAIRWISE_CAP = 2048


@dataclass(frozen=True)
class Prediction:
    """Outcome for one vector: label is UNKNOWN exactly when margin < 0."""

    label: str
    nearest: str
    distance: float
    margin: float


def _as_label_array(y) -> np.ndarray:
    return np.asarray(list(y), dtype=object)


def fit_centroids(X: np.ndarray, y: Sequence[str]) -> tuple[list[str], np.ndarray, dict[str, int]]:
    """Per-class arithmetic means.

    Returns (sorted labels, (k, d) centroid matrix, per-label counts).
    """
    X = np.asarray(X, dtype=np.float64)
    y = _as_label_array(y)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y length mismatch")
    labels = sorted(set(y.tolist()))
    if not labels:
        raise EmptyClass("<none>")
    if UNKNOWN in labels:
        raise ValueError(f"{UNKNOWN!r} is reserved and cannot be a training label")
    centroids = np.zeros((len(labels), X.shape[1]))
    counts: dict[str, int] = {}
    for i, lab in enumerate(labels):
        mask = y == lab
        n = int(mask.sum())
        if n == 0:
            raise EmptyClass(lab)
        centroids[i] = X[mask].mean(axis=0)
        counts[lab] = n
    return labels, centroids, counts


def fit_projection(X: np.ndarray, y: Sequence[str], ridge_scale: float = 1e-6) -> np.ndarray:
    """Within-class whitening transform W = (S_w + eps*I)^(-1/2).

    S_w is the pooled within-class covariance (MLE normalization) and
    eps = ridge_scale * trace(S_w) / d. After projecting with W the recomputed
    pooled scatter is approximately the identity.
    """
    X = np.asarray(X, dtype=np.float64)
    y = _as_label_array(y)
    labels = sorted(set(y.tolist()))
    if len(labels) < 2:
        raise ValueError("projection needs >= 2 classes")
    d = X.shape[1]
    scatter = np.zeros((d, d))
    for lab in labels:
        pts = X[y == lab]
        centered = pts - pts.mean(axis=0)
        scatter += centered.T @ centered
    scatter /= X.shape[0]
    eps = ridge_scale * np.trace(scatter) / d
    eigvals, eigvecs = np.linalg.eigh(scatter)
    inv_sqrt = (np.clip(eigvals, 0.0, None) + eps) ** -0.5
    if not np.all(np.isfinite(inv_sqrt)):
        raise DegenerateScatter("within-class scatter is not invertible even with ridge")
    return (eigvecs * inv_sqrt) @ eigvecs.T


def _class_distances(X: np.ndarray, y: np.ndarray, labels: list[str], centroids: np.ndarray):
    for i, lab in enumerate(labels):
        yield i, lab, np.linalg.norm(X[y == lab] - centroids[i], axis=1)


def fit_boundaries(
    X: np.ndarray,
    y: Sequence[str],
    labels: list[str],
    centroids: np.ndarray,
    mode: str = "statistic",
    lam: float = 2.0,
    eta_scale: float = 0.05,
    tol: float = 1e-4,
    max_steps: int = 10_000,
    radius_min: float = 0.0,
) -> np.ndarray:
    """Per-class decision radii from in-class distances to the centroid.

    statistic: radius = mean + lam * std (closed form).
    balanced:  fixed-point update radius += eta * (frac(d >= r) - frac(d < r))
               with eta = eta_scale * mean, which settles in the neighborhood
               of the in-class median distance.

    ``radius_min`` is applied only to degenerate classes (singleton or
    zero-variance), so exact repeats of training utterances are not rejected.
    """
    X = np.asarray(X, dtype=np.float64)
    y = _as_label_array(y)
    radii = np.zeros(len(labels))
    for i, lab, dists in _class_distances(X, y, labels, centroids):
        if mode == "statistic":
            r = float(dists.mean() + lam * dists.std())
        elif mode == "balanced":
            mean = float(dists.mean())
            r = mean
            eta = eta_scale * mean
            for _ in range(max_steps):
                ge = float(np.mean(dists >= r))
                delta = eta * (ge - (1.0 - ge))
                if abs(delta) < tol:
                    break
                r += delta
        else:
            raise UnknownMode(mode)
        degenerate = dists.size <= 1 or float(dists.max()) == 0.0
        if degenerate:
            r = max(r, radius_min)
        radii[i] = r
    return radii


def mean_pairwise_distance(X: np.ndarray) -> float:
    """Mean Euclidean distance over all point pairs (strided above a cap)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        return 0.0
    if n > _PAIRWISE_CAP:
        X = X[:: int(np.ceil(n / _PAIRWISE_CAP))]
    from scipy.spatial.distance import pdist

    return float(pdist(X).mean())


class CentroidBoundaryDetector(BaseEstimator, ClassifierMixin):
    """Open-set intent classifier: nearest centroid plus adaptive radius.

    Parameters
    ----------
    mode : "statistic" | "balanced"
        Boundary fitting mode, see :func:`fit_boundaries`.
    lam : float
        Std multiplier for statistic mode.
    eta_scale : float
        Step-size factor for balanced mode.
    project : bool
        Apply within-class whitening before centroids and boundaries.
    radius_floor_scale : float
        Degenerate-class radius floor, as a fraction of the global mean
        pairwise training distance.

    The fitted model is immutable; ``predict`` is pure and thread-safe.
    """

    def __init__(
        self,
        mode: str = "statistic",
        lam: float = 2.0,
        eta_scale: float = 0.05,
        project: bool = False,
        radius_floor_scale: float = 1e-3,
    ):
        self.mode = mode
        self.lam = lam
        self.eta_scale = eta_scale
        self.project = project
        self.radius_floor_scale = radius_floor_scale

    def fit(self, X, y) -> "CentroidBoundaryDetector":
        if self.mode not in ("statistic", "balanced"):
            raise UnknownMode(self.mode)
        X = check_array(X, dtype=np.float64)
        y = _as_label_array(y)
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y length mismatch")
        self.input_dim_ = X.shape[1]
        self.projection_ = fit_projection(X, y) if self.project else None
        Xp = X @ self.projection_ if self.projection_ is not None else X
        self.labels_, self.centroids_, self.counts_ = fit_centroids(Xp, y)
        radius_min = self.radius_floor_scale * mean_pairwise_distance(Xp)
        self.radii_ = fit_boundaries(
            Xp,
            y,
            self.labels_,
            self.centroids_,
            mode=self.mode,
            lam=self.lam,
            eta_scale=self.eta_scale,
            radius_min=radius_min,
        )
        return self

    # sklearn convention: classes_ mirrors labels_ (UNKNOWN is not a class)
    @property
    def classes_(self) -> np.ndarray:
        return np.asarray(self.labels_, dtype=object)

    def _check_fitted(self):
        if not hasattr(self, "centroids_"):
            raise AttributeError("detector is not fitted")

    def _project(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.input_dim_:
            raise DimMismatch(self.input_dim_, X.shape[1])
        return X @ self.projection_ if self.projection_ is not None else X

    def decision(self, X) -> list[Prediction]:
        """Full per-point outcome: nearest label, distance, margin, label."""
        self._check_fitted()
        X = check_array(np.atleast_2d(np.asarray(X, dtype=np.float64)), dtype=np.float64)
        Xp = self._project(X)
        out: list[Prediction] = []
        for start in range(0, Xp.shape[0], 1024):
            chunk = Xp[start : start + 1024]
            dists = np.linalg.norm(chunk[:, None, :] - self.centroids_[None, :, :], axis=2)
            nearest_idx = dists.argmin(axis=1)  # ties: first = lexicographic
            for row, j in enumerate(nearest_idx):
                dist = float(dists[row, j])
                margin = float(self.radii_[j]) - dist
                label = self.labels_[j] if margin >= 0 else UNKNOWN
                out.append(Prediction(label=label, nearest=self.labels_[j], distance=dist, margin=margin))
        return out

    def predict_one(self, x) -> Prediction:
        return self.decision(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]

    def predict(self, X) -> np.ndarray:
        return np.asarray([p.label for p in self.decision(X)], dtype=object)

    # --- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "version": MODEL_FORMAT_VERSION,
            "metric": MODEL_METRIC,
            "labels": list(self.labels_),
            "dim": int(self.input_dim_),
            "centroids": [[float(v) for v in row] for row in self.centroids_],
            "radii": [float(r) for r in self.radii_],
            "projection": None
            if self.projection_ is None
            else [[float(v) for v in row] for row in self.projection_],
            "mode": self.mode,
            "counts": dict(self.counts_),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CentroidBoundaryDetector":
        if d.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        det = cls(mode=d["mode"], project=d.get("projection") is not None)
        det.labels_ = list(d["labels"])
        det.centroids_ = np.asarray(d["centroids"], dtype=np.float64)
        det.radii_ = np.asarray(d["radii"], dtype=np.float64)
        det.projection_ = (
            None if d.get("projection") is None else np.asarray(d["projection"], dtype=np.float64)
        )
        det.input_dim_ = int(d["dim"])
        det.counts_ = dict(d.get("counts", {}))
        return det


def fit_detector(
    embeddings: EmbeddingMatrix, labels: Mapping[str, str], **params
) -> CentroidBoundaryDetector:
    """Fit from an id-keyed matrix and an id -> intent map.

    Raises :class:`MissingEmbedding` when a labeled id has no vector.
    """
    ids = list(labels)
    for uid in ids:
        if uid not in embeddings:
            raise MissingEmbedding(uid)
    X = embeddings.matrix(ids)
    y = [labels[uid] for uid in ids]
    return CentroidBoundaryDetector(**params).fit(X, y)


def save_model(
    path: str | os.PathLike,
    detector: CentroidBoundaryDetector,
    vocab: Vocabulary | None = None,
) -> None:
    doc = detector.to_dict()
    doc["vocab"] = vocab.to_dict() if vocab is not None else None
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)
        f.write("\n")


def load_model(path: str | os.PathLike) -> tuple[CentroidBoundaryDetector, Vocabulary | None]:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    det = CentroidBoundaryDetector.from_dict(doc)
    vocab = Vocabulary.from_dict(doc["vocab"]) if doc.get("vocab") else None
    return det, vocab


@dataclass(frozen=True)
class DetectionMetrics:
    accuracy: float
    per_class_f1: dict[str, float]
    macro_f1_known: float
    unknown_recall: float | None
    unknown_precision: float | None

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class_f1": dict(self.per_class_f1),
            "macro_f1_known": self.macro_f1_known,
            "unknown_recall": self.unknown_recall,
            "unknown_precision": self.unknown_precision,
        }


def evaluate_detection(
    predictions: Sequence[str], gold: Sequence[str], known_set: Sequence[str]
) -> DetectionMetrics:
    """Open-split detection metrics.

    Gold labels for held-out classes must already be mapped to UNKNOWN by the
    split generator. Any prediction or gold label outside
    known_set + {UNKNOWN} raises :class:`LabelMismatch`.
    """
    preds = list(predictions)
    golds = list(gold)
    if len(preds) != len(golds):
        raise ValueError("predictions and gold length mismatch")
    known = sorted(set(known_set))
    allowed = set(known) | {UNKNOWN}
    for lab in preds:
        if lab not in allowed:
            raise LabelMismatch(f"prediction {lab!r} outside known set")
    for lab in golds:
        if lab not in allowed:
            raise LabelMismatch(f"gold label {lab!r} outside known set")

    n = len(preds)
    accuracy = sum(p == g for p, g in zip(preds, golds)) / n if n else 0.0

    def f1_for(label: str) -> float:
        tp = sum(1 for p, g in zip(preds, golds) if p == label and g == label)
        fp = sum(1 for p, g in zip(preds, golds) if p == label and g != label)
        fn = sum(1 for p, g in zip(preds, golds) if p != label and g == label)
        if 2 * tp + fp + fn == 0:
            return 0.0
        return 2 * tp / (2 * tp + fp + fn)

    per_class = {lab: f1_for(lab) for lab in known}
    macro = sum(per_class.values()) / len(known) if known else 0.0

    gold_unknown = sum(1 for g in golds if g == UNKNOWN)
    pred_unknown = sum(1 for p in preds if p == UNKNOWN)
    tp_unknown = sum(1 for p, g in zip(preds, golds) if p == g == UNKNOWN)
    recall = tp_unknown / gold_unknown if gold_unknown else None
    precision = tp_unknown / pred_unknown if pred_unknown else None
    return DetectionMetrics(
        accuracy=accuracy,
        per_class_f1=per_class,
        macro_f1_known=macro,
        unknown_recall=recall,
        unknown_precision=precision,
    )
