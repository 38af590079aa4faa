"""Benchmark harness: open splits over labeled datasets, detection plus
discovery scoring, and a synthetic fixture generator.

A known-class ratio picks which intent classes the detector may train on;
remaining classes appear only at test time with gold mapped to UNKNOWN.
Everything except wall-clock timing is a pure function of the seed.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detection import (
    UNKNOWN,
    CentroidBoundaryDetector,
    DetectionMetrics,
    evaluate_detection,
)
from .discovery import cluster_embeddings, estimate_k
from .clustering import AUTO, ClusteringConfig
from .embeddings import EmbeddingMatrix, Utterance
from .errors import EmptyDataset, MissingColumn, ParseError, TooFewClasses
from .metrics import clustering_metrics
from .text import TfidfEncoder


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: str
    format: str = "csv"
    text_column: str = "text"
    label_column: str = "label"


def load_dataset(spec: DatasetSpec) -> list[Utterance]:
    """Read a text,label CSV; ids are synthesized row numbers, labels trimmed."""
    with open(spec.path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise EmptyDataset(f"{spec.path} has no header")
        for col in (spec.text_column, spec.label_column):
            if col not in reader.fieldnames:
                raise MissingColumn(col)
        out: list[Utterance] = []
        for i, row in enumerate(reader):
            text = row[spec.text_column]
            label = row[spec.label_column]
            if text is None or not text.strip():
                raise ParseError(i + 2, "empty text")
            if label is None or not label.strip():
                raise ParseError(i + 2, "empty label")
            out.append(Utterance(id=str(i), text=text, gold_label=label.strip()))
    if not out:
        raise EmptyDataset(f"{spec.path} has no rows")
    return out


@dataclass(frozen=True)
class SplitConfig:
    known_class_ratio: float
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.known_class_ratio <= 1.0:
            raise ValueError("known_class_ratio must be in (0, 1]")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


@dataclass(frozen=True)
class OpenSplit:
    train: list[Utterance]  # known classes only, original gold labels
    test: list[Utterance]   # all classes; unknown-class gold mapped to UNKNOWN
    known_set: list[str]
    unknown_set: list[str]
    original_gold: dict[str, str]  # test id -> pre-UNKNOWN gold, for discovery scoring


def make_open_split(dataset: list[Utterance], split: SplitConfig) -> OpenSplit:
    """Deterministic open split.

    Classes are shuffled by the seed and the first ceil(ratio * C) become
    known. Within each known class a per-class-seeded shuffle sends
    train_fraction of the rows (floored, at least one) to train; everything
    else, plus all unknown-class rows relabeled UNKNOWN, is test. Output
    keeps dataset row order.
    """
    classes = sorted({u.gold_label for u in dataset if u.gold_label is not None})
    if len(classes) < 2:
        raise TooFewClasses(len(classes))
    rng = np.random.default_rng(split.seed)
    order = [classes[i] for i in rng.permutation(len(classes))]
    n_known = math.ceil(split.known_class_ratio * len(classes))
    known = sorted(order[:n_known])
    unknown = sorted(order[n_known:])

    train_ids: set[str] = set()
    for idx, label in enumerate(known):
        rows = [u.id for u in dataset if u.gold_label == label]
        class_rng = np.random.default_rng([split.seed, idx])
        shuffled = [rows[i] for i in class_rng.permutation(len(rows))]
        take = max(1, int(split.train_fraction * len(rows)))
        train_ids.update(shuffled[:take])

    known_set = set(known)
    train = [u for u in dataset if u.id in train_ids]
    test: list[Utterance] = []
    original_gold: dict[str, str] = {}
    for u in dataset:
        if u.id in train_ids:
            continue
        original_gold[u.id] = u.gold_label
        gold = u.gold_label if u.gold_label in known_set else UNKNOWN
        test.append(Utterance(id=u.id, text=u.text, gold_label=gold))
    return OpenSplit(
        train=train, test=test, known_set=known, unknown_set=unknown,
        original_gold=original_gold,
    )


@dataclass(frozen=True)
class BenchReport:
    dataset: str
    config: dict
    detection: DetectionMetrics
    discovery: dict | None  # None when the unknown set is empty
    timing: dict

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "config": self.config,
            "detection": self.detection.to_dict(),
            "discovery": self.discovery if self.discovery is not None else {"applicable": False},
            "timing": self.timing,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def table(self) -> str:
        det = self.detection
        rows = [
            ("dataset", self.dataset),
            ("known classes", str(len(self.config["known_set"]))),
            ("unknown classes", str(len(self.config["unknown_set"]))),
            ("accuracy", f"{det.accuracy:.4f}"),
            ("macro-F1 (known)", f"{det.macro_f1_known:.4f}"),
            ("UNKNOWN recall", _fmt(det.unknown_recall)),
            ("UNKNOWN precision", _fmt(det.unknown_precision)),
        ]
        if self.discovery is None:
            rows.append(("discovery", "not applicable"))
        else:
            rows += [
                ("discovery NMI", f"{self.discovery['NMI']:.4f}"),
                ("discovery ARI", f"{self.discovery['ARI']:.4f}"),
                ("discovery accuracy", f"{self.discovery['accuracy']:.4f}"),
                ("k estimated / true", f"{self.discovery['k_estimated']} / {self.discovery['k_true']}"),
            ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)


def _fmt(x: float | None) -> str:
    return "n/a" if x is None else f"{x:.4f}"


def run_benchmark(
    dataset_name: str,
    dataset: list[Utterance],
    split_cfg: SplitConfig,
    mode: str = "statistic",
    project: bool = False,
    method: str = "kmeans",
    k_max: int = 20,
    k_threshold: float = 0.5,
    restarts: int = 10,
) -> BenchReport:
    """Fit on the open split's train side, score detection on test, and
    cluster the true-unknown test subset against its original gold labels."""
    split = make_open_split(dataset, split_cfg)
    timing: dict[str, float] = {}

    t0 = time.perf_counter()
    encoder = TfidfEncoder().fit([u.text for u in split.train])
    detector = CentroidBoundaryDetector(mode=mode, project=project).fit(
        encoder.transform([u.text for u in split.train]),
        [u.gold_label for u in split.train],
    )
    timing["fit_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    preds = detector.predict(encoder.transform([u.text for u in split.test]))
    detection = evaluate_detection(
        list(preds), [u.gold_label for u in split.test], split.known_set
    )
    timing["detect_s"] = time.perf_counter() - t0

    discovery = None
    t0 = time.perf_counter()
    true_unknown = [u for u in split.test if u.gold_label == UNKNOWN]
    if true_unknown:
        unk_encoder = TfidfEncoder().fit([u.text for u in true_unknown])
        matrix = EmbeddingMatrix(
            (u.id, v)
            for u, v in zip(true_unknown, unk_encoder.transform([u.text for u in true_unknown]))
        )
        cfg = ClusteringConfig(method=method, k=AUTO, seed=split_cfg.seed, restarts=restarts)
        cap = min(k_max, len(true_unknown))
        k_estimated = estimate_k(matrix, cap, threshold=k_threshold, config=cfg)
        assignment = cluster_embeddings(matrix, cfg.with_k(k_estimated))
        scores = clustering_metrics(assignment, split.original_gold)
        discovery = {
            **scores,
            "k_estimated": k_estimated,
            "k_true": len(split.unknown_set),
        }
    timing["discover_s"] = time.perf_counter() - t0
    timing["total_s"] = sum(timing.values())

    return BenchReport(
        dataset=dataset_name,
        config={
            "known_class_ratio": split_cfg.known_class_ratio,
            "train_fraction": split_cfg.train_fraction,
            "seed": split_cfg.seed,
            "mode": mode,
            "project": project,
            "method": method,
            "k_max": k_max,
            "k_threshold": k_threshold,
            "restarts": restarts,
            "known_set": split.known_set,
            "unknown_set": split.unknown_set,
        },
        detection=detection,
        discovery=discovery,
        timing=timing,
    )


def report_filename(dataset: str, ratio: float, seed: int) -> str:
    return f"bench_{dataset}_{ratio:g}_{seed}.json"


def write_report(report: BenchReport, out_dir: str | Path) -> Path:
    out = Path(out_dir) / report_filename(
        report.dataset, report.config["known_class_ratio"], report.config["seed"]
    )
    out.write_text(report.to_json(), encoding="utf-8")
    return out


# --- synthetic fixtures --------------------------------------------------------

# (action verb, object, filler tokens); vocabularies are pairwise disjoint and
# no object or filler is itself a verb, so pair extraction stays clean.
_SYNTHETIC_INTENTS = [
    ("book", "flight", ["boston", "airline", "gate"]),
    ("cancel", "reservation", ["hotel", "january", "room"]),
    ("upgrade", "package", ["data", "roaming", "gigabyte"]),
    ("reset", "password", ["login", "portal", "security"]),
    ("track", "parcel", ["shipment", "route", "map"]),
    ("renew", "subscription", ["magazine", "yearly", "edition"]),
    ("transfer", "funds", ["savings", "iban", "branch"]),
    ("report", "outage", ["internet", "router", "signal"]),
]


def make_synthetic_dataset(
    n_classes: int = 6, rows_per_class: int = 100, seed: int = 0
) -> list[Utterance]:
    """Separable synthetic corpus with disjoint per-intent vocabularies.

    Every row of an intent uses the same token multiset (verb, object, three
    topic fillers in shuffled order), so rows of one intent share a single
    TF-IDF direction while different intents are orthogonal. Gold label is
    "verb_object".
    """
    if not 2 <= n_classes <= len(_SYNTHETIC_INTENTS):
        raise ValueError(f"n_classes must be in [2, {len(_SYNTHETIC_INTENTS)}]")
    rng = np.random.default_rng(seed)
    out: list[Utterance] = []
    row = 0
    for verb, obj, fillers in _SYNTHETIC_INTENTS[:n_classes]:
        for _ in range(rows_per_class):
            tail = [fillers[i] for i in rng.permutation(len(fillers))]
            out.append(
                Utterance(
                    id=str(row),
                    text=" ".join([verb, obj, *tail]),
                    gold_label=f"{verb}_{obj}",
                )
            )
            row += 1
    return out


def write_dataset_csv(dataset: list[Utterance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["text", "label"])
        for u in dataset:
            writer.writerow([u.text, u.gold_label])
