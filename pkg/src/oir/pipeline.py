"""Batch orchestration: detect known intents, route unknowns through
discovery and labeling, persist one result record per utterance."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .canonical import SynonymLexicon, canonicalize_label
from .clustering import AUTO, ClusteringConfig
from .detection import UNKNOWN, CentroidBoundaryDetector
from .discovery import cluster_embeddings
from .embeddings import EmbeddingMatrix, Utterance, read_utterances
from .errors import DimMismatch, MissingEmbedding, NoContent, OirError
from .labeling import Lexicon, default_lexicon, extract_action_object, label_cluster
from .store import BatchJob, ResultRecord, Store
from .text import TfidfEncoder, Vocabulary, embed_tfidf, tokenize

UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class PipelineConfig:
    """Effective batch configuration; snapshotted into every job."""

    method: str = "kmeans"
    k: int | str = AUTO
    seed: int = 0
    restarts: int = 10
    max_iter: int = 300
    tol: float = 1e-6
    linkage: str = "average"
    refine_rounds: int = 0
    min_discover: int = 10
    k_max: int = 20
    k_threshold: float = 0.5

    def clustering_config(self) -> ClusteringConfig:
        return ClusteringConfig(
            method=self.method,
            k=self.k,
            seed=self.seed,
            max_iter=self.max_iter,
            tol=self.tol,
            restarts=self.restarts,
            linkage=self.linkage,
            refine_rounds=self.refine_rounds,
        )

    def snapshot(self) -> dict:
        return asdict(self)


def ingest_batch(store: Store, lines_or_text, config: PipelineConfig) -> str:
    """Validate utterance JSONL and persist a queued job; returns the job id.

    The input is durably stored (fsynced into the write log) before return.
    """
    if isinstance(lines_or_text, str):
        lines = lines_or_text.splitlines()
    else:
        lines = lines_or_text
    utterances = read_utterances(lines)
    job = store.create_job(utterances, config.snapshot())
    return job.id


def _detection_embeddings(
    utterances: Sequence[Utterance],
    vocab: Vocabulary | None,
    sidecar: EmbeddingMatrix | None,
) -> EmbeddingMatrix:
    if sidecar is not None:
        for u in utterances:
            if u.id not in sidecar:
                raise MissingEmbedding(u.id)
        return sidecar.subset([u.id for u in utterances])
    if vocab is None:
        raise OirError("model has no embedded vocabulary and no sidecar embeddings were given")
    return EmbeddingMatrix((u.id, embed_tfidf(u.text, vocab)) for u in utterances)


def run_pipeline(
    store: Store,
    job_id: str,
    detector: CentroidBoundaryDetector,
    vocab: Vocabulary | None = None,
    sidecar: EmbeddingMatrix | None = None,
    config: PipelineConfig | None = None,
    lexicon: Lexicon | None = None,
    synonyms: SynonymLexicon | None = None,
) -> BatchJob:
    """Run detect -> discover -> label -> normalize for a queued job.

    Known predictions become detected records with confidence
    clamp(margin/radius, 0, 1). The UNKNOWN set is clustered and labeled when
    it reaches ``min_discover`` utterances, otherwise every unknown is written
    as "unclassified" with cluster_id -1. Failures mark the job failed with
    the error message; success commits all records atomically.
    """
    cfg = config or PipelineConfig()
    lex = lexicon or default_lexicon()
    utterances = store.get_utterances(job_id)
    store.mark_running(job_id)
    try:
        records = _execute(utterances, job_id, detector, vocab, sidecar, cfg, lex, synonyms)
    except (OirError, ValueError) as e:
        return store.fail_job(job_id, str(e))
    detected = sum(1 for r in records if r.source == "detected")
    counts = {"total": len(records), "detected": detected, "discovered": len(records) - detected}
    return store.complete_job(job_id, records, counts)


def _execute(utterances, job_id, detector, vocab, sidecar, cfg, lex, synonyms):
    matrix = _detection_embeddings(utterances, vocab, sidecar)
    if matrix.dim != detector.input_dim_:
        raise DimMismatch(detector.input_dim_, matrix.dim, "batch vs model")

    ids = [u.id for u in utterances]
    texts = {u.id: u.text for u in utterances}
    predictions = detector.decision(matrix.matrix(ids))
    radii = dict(zip(detector.labels_, detector.radii_))

    records: dict[str, ResultRecord] = {}
    unknown_ids: list[str] = []
    for uid, pred in zip(ids, predictions):
        if pred.label == UNKNOWN:
            unknown_ids.append(uid)
            continue
        radius = float(radii[pred.label])
        confidence = 1.0 if radius == 0.0 else min(1.0, max(0.0, pred.margin / radius))
        records[uid] = ResultRecord(
            job_id=job_id,
            utterance_id=uid,
            text=texts[uid],
            label=pred.label,
            confidence=confidence,
            source="detected",
            distance=pred.distance,
        )

    if unknown_ids and len(unknown_ids) >= cfg.min_discover:
        for uid, label, confidence, cluster in _discover(
            unknown_ids, texts, sidecar, cfg, lex, synonyms
        ):
            records[uid] = ResultRecord(
                job_id=job_id,
                utterance_id=uid,
                text=texts[uid],
                label=label,
                confidence=confidence,
                source="discovered",
                cluster_id=cluster,
            )
    else:
        for uid in unknown_ids:
            records[uid] = ResultRecord(
                job_id=job_id,
                utterance_id=uid,
                text=texts[uid],
                label=UNCLASSIFIED,
                confidence=0.0,
                source="discovered",
                cluster_id=-1,
            )
    return [records[uid] for uid in ids]


def _discover(unknown_ids, texts, sidecar, cfg, lex, synonyms):
    """Cluster the unknown set and produce (id, label, confidence, cluster) rows.

    Labeling always runs in a TF-IDF space fit on the unknown utterances
    themselves (the detector's vocabulary knows nothing about new intents);
    clustering uses the sidecar vectors when present, that same TF-IDF space
    otherwise.
    """
    unknown_texts = [texts[uid] for uid in unknown_ids]
    encoder = TfidfEncoder().fit(unknown_texts)
    label_vocab = encoder.vocabulary_
    label_matrix = EmbeddingMatrix(
        (uid, vec) for uid, vec in zip(unknown_ids, encoder.transform(unknown_texts))
    )
    cluster_matrix = sidecar.subset(unknown_ids) if sidecar is not None else label_matrix

    clustering = cfg.clustering_config()
    assignment = cluster_embeddings(
        cluster_matrix,
        clustering,
        k_max=min(cfg.k_max, len(unknown_ids)),
        threshold=cfg.k_threshold,
    )

    pairs = {uid: extract_action_object(tokenize(texts[uid]), lex) for uid in unknown_ids}
    out = []
    for cluster, members in assignment.cluster_members().items():
        centroid = label_matrix.matrix(members).mean(axis=0)
        try:
            label = label_cluster(
                [texts[uid] for uid in members],
                [pairs[uid] for uid in members],
                centroid=centroid,
                vocab=label_vocab,
                stopwords=lex.stopwords,
            )
            display = canonicalize_label(label.tokens, synonyms).display
            confidence = label.confidence
        except NoContent:
            # nothing but stopwords/OOV in this cluster; don't sink the job
            display, confidence = UNCLASSIFIED, 0.0
        for uid in members:
            out.append((uid, display, confidence, cluster))
    return out


# --- querying and reports -----------------------------------------------------

MAX_LIMIT = 1000
CSV_HEADER = ["utterance_id", "text", "label", "confidence", "source", "cluster_id", "distance"]


@dataclass(frozen=True)
class ResultPage:
    job_id: str
    records: list[ResultRecord]
    total: int  # matches after filtering, before pagination
    limit: int
    offset: int

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "total": self.total,
            "limit": self.limit,
            "offset": self.offset,
            "records": [r.to_dict() for r in self.records],
        }


def query_results(
    store: Store,
    job_id: str,
    label: str | None = None,
    source: str | None = None,
    min_confidence: float | None = None,
    limit: int = 100,
    offset: int = 0,
) -> ResultPage:
    """Filtered, paginated records in ascending utterance-id order.

    Filters are conjunctive; two identical queries over a completed job
    return identical pages.
    """
    if not 1 <= limit <= MAX_LIMIT:
        raise ValueError(f"limit must be in [1, {MAX_LIMIT}]")
    if offset < 0:
        raise ValueError("offset must be >= 0")
    rows = sorted(store.results(job_id), key=lambda r: r.utterance_id)
    if label is not None:
        rows = [r for r in rows if r.label == label]
    if source is not None:
        rows = [r for r in rows if r.source == source]
    if min_confidence is not None:
        rows = [r for r in rows if r.confidence >= min_confidence]
    return ResultPage(
        job_id=job_id,
        records=rows[offset : offset + limit],
        total=len(rows),
        limit=limit,
        offset=offset,
    )


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_report(store: Store, job_id: str, format: str = "csv") -> str:
    """Render a completed job's records; output is byte-stable across reruns."""
    job = store.get_job(job_id)
    rows = sorted(store.results(job_id), key=lambda r: r.utterance_id)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(
                [
                    r.utterance_id,
                    r.text,
                    r.label,
                    _csv_cell(r.confidence),
                    r.source,
                    _csv_cell(r.cluster_id),
                    _csv_cell(r.distance),
                ]
            )
        return buf.getvalue()
    if format == "json":
        doc = {"job": job.to_dict(), "records": [r.to_dict() for r in rows]}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    raise ValueError(f"unknown report format {format!r}")


def import_report(text: str) -> list[ResultRecord]:
    """Parse a JSON report back into records (round-trip check support)."""
    doc = json.loads(text)
    return [ResultRecord.from_dict(r) for r in doc["records"]]
