"""The ``oir`` command line: fit, run, query, bench, serve.

OIR_DATA_DIR and OIR_PORT provide defaults; explicit flags win.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bench import (
    DatasetSpec,
    SplitConfig,
    load_dataset,
    run_benchmark,
    write_report,
)
from .canonical import load_synonyms
from .clustering import AUTO
from .detection import CentroidBoundaryDetector, load_model, save_model
from .embeddings import load_embeddings
from .errors import OirError
from .labeling import load_lexicon
from .pipeline import PipelineConfig, export_report, ingest_batch, query_results, run_pipeline
from .store import Store
from .text import TfidfEncoder

DEFAULT_DATA_DIR = "oir-data"
DEFAULT_PORT = 8000


def _data_dir(args) -> str:
    return args.data_dir or os.environ.get("OIR_DATA_DIR") or DEFAULT_DATA_DIR


def _parse_k(value: str):
    if value == AUTO:
        return AUTO
    return int(value)


def cmd_fit(args) -> int:
    spec = DatasetSpec(
        name=Path(args.train).stem, path=args.train,
        text_column=args.text_column, label_column=args.label_column,
    )
    dataset = load_dataset(spec)
    labels = [u.gold_label for u in dataset]
    vocab = None
    if args.embeddings:
        matrix = load_embeddings(args.embeddings)
        X = matrix.matrix([u.id for u in dataset])
    else:
        encoder = TfidfEncoder(min_df=args.min_df).fit([u.text for u in dataset])
        vocab = encoder.vocabulary_
        X = encoder.transform([u.text for u in dataset])
    detector = CentroidBoundaryDetector(
        mode=args.mode, lam=getattr(args, "lambda"), project=args.project
    ).fit(X, labels)
    save_model(args.model_out, detector, vocab)
    print(f"fitted {len(detector.labels_)} intents from {len(dataset)} rows -> {args.model_out}")
    return 0


def cmd_run(args) -> int:
    detector, vocab = load_model(args.model)
    sidecar = load_embeddings(args.embeddings) if args.embeddings else None
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    synonyms = load_synonyms(args.synonyms) if args.synonyms else None
    config = PipelineConfig(
        method=args.method,
        k=_parse_k(args.k),
        seed=args.seed,
        min_discover=args.min_discover,
        k_max=args.k_max,
    )
    store = Store(_data_dir(args))
    with open(args.batch, encoding="utf-8") as f:
        job_id = ingest_batch(store, f.read(), config)
    job = run_pipeline(
        store, job_id, detector, vocab=vocab, sidecar=sidecar,
        config=config, lexicon=lexicon, synonyms=synonyms,
    )
    if job.status == "failed":
        print(f"{job.id} failed: {job.error}", file=sys.stderr)
        return 1
    print(f"{job.id} completed: {json.dumps(job.counts)}")
    return 0


def cmd_query(args) -> int:
    store = Store(_data_dir(args))
    if args.format == "csv":
        # full report filtered client-side keeps the CSV header contract intact
        page = query_results(
            store, args.job, label=args.label, source=args.source,
            min_confidence=args.min_confidence, limit=args.limit, offset=args.offset,
        )
        from .pipeline import CSV_HEADER, _csv_cell
        import csv as _csv

        writer = _csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in page.records:
            writer.writerow([
                r.utterance_id, r.text, r.label, _csv_cell(r.confidence),
                r.source, _csv_cell(r.cluster_id), _csv_cell(r.distance),
            ])
    else:
        page = query_results(
            store, args.job, label=args.label, source=args.source,
            min_confidence=args.min_confidence, limit=args.limit, offset=args.offset,
        )
        print(json.dumps(page.to_dict(), sort_keys=True, indent=2))
    return 0


def cmd_bench(args) -> int:
    spec = DatasetSpec(
        name=Path(args.dataset).stem, path=args.dataset,
        text_column=args.text_column, label_column=args.label_column,
    )
    dataset = load_dataset(spec)
    ratios = [args.known_ratio] if args.known_ratio is not None else [0.25, 0.5, 0.75]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for ratio in ratios:
        report = run_benchmark(
            spec.name, dataset,
            SplitConfig(known_class_ratio=ratio, train_fraction=args.train_fraction, seed=args.seed),
            mode=args.mode, project=args.project, method=args.method,
        )
        path = write_report(report, out_dir)
        print(report.table())
        print(f"report -> {path}")
        print()
    return 0


def cmd_serve(args) -> int:
    from .server import create_app, serve

    data_dir = _data_dir(args)
    port = args.port or int(os.environ.get("OIR_PORT") or DEFAULT_PORT)
    model_path = args.model or str(Path(data_dir) / "model.json")
    detector, vocab = load_model(model_path)
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    synonyms = load_synonyms(args.synonyms) if args.synonyms else None
    config = PipelineConfig(
        method=args.method, k=_parse_k(args.k), seed=args.seed,
        min_discover=args.min_discover, k_max=args.k_max,
    )
    store = Store(data_dir)
    app = create_app(store, detector, vocab=vocab, config=config,
                     lexicon=lexicon, synonyms=synonyms)
    print(f"serving on {args.host}:{port} (data dir {data_dir})")
    serve(app, host=args.host, port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oir", description="open intent recognition engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="train a detection model from a labeled CSV")
    p.add_argument("--train", required=True, help="CSV with text,label columns")
    p.add_argument("--embeddings", help="sidecar embedding JSONL keyed by row number")
    p.add_argument("--model-out", required=True)
    p.add_argument("--mode", choices=["statistic", "balanced"], default="statistic")
    p.add_argument("--lambda", type=float, default=2.0, help="std multiplier (statistic mode)")
    p.add_argument("--project", action="store_true", help="apply within-class whitening")
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--text-column", default="text")
    p.add_argument("--label-column", default="label")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("run", help="run the batch pipeline on an utterance JSONL")
    p.add_argument("--batch", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--embeddings", help="sidecar embedding JSONL covering all batch ids")
    p.add_argument("--k", default=AUTO, help='cluster count for discovery, or "auto"')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["kmeans", "gmm", "agglomerative"], default="kmeans")
    p.add_argument("--min-discover", type=int, default=10)
    p.add_argument("--k-max", type=int, default=20)
    p.add_argument("--lexicon", help="lexicon TSV (defaults to the bundled one)")
    p.add_argument("--synonyms", help="synonym TSV (defaults to empty)")
    p.add_argument("--data-dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("query", help="query results of a completed job")
    p.add_argument("--job", required=True)
    p.add_argument("--label")
    p.add_argument("--source", choices=["detected", "discovered"])
    p.add_argument("--min-confidence", type=float)
    p.add_argument("--limit", type=int, default=100)
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--data-dir")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="run the open-split benchmark over a labeled CSV")
    p.add_argument("--dataset", required=True)
    p.add_argument("--known-ratio", type=float, help="default: sweep 0.25, 0.5, 0.75")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--mode", choices=["statistic", "balanced"], default="statistic")
    p.add_argument("--project", action="store_true")
    p.add_argument("--method", choices=["kmeans", "gmm", "agglomerative"], default="kmeans")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--text-column", default="text")
    p.add_argument("--label-column", default="label")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--port", type=int)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir")
    p.add_argument("--model", help="model path (default: <data-dir>/model.json)")
    p.add_argument("--k", default=AUTO)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["kmeans", "gmm", "agglomerative"], default="kmeans")
    p.add_argument("--min-discover", type=int, default=10)
    p.add_argument("--k-max", type=int, default=20)
    p.add_argument("--lexicon")
    p.add_argument("--synonyms")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OirError, OSError, json.JSONDecodeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
