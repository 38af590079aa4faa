"""End-to-end check with exporter-produced embeddings.

Fits the detector on four known intents using the sidecar vectors, runs the
batch pipeline on the full corpus with the same sidecar, and prints discovery
NMI over the held-out utterances.
"""
import json
import sys
import tempfile

from oir.detection import CentroidBoundaryDetector
from oir.embeddings import load_embeddings, load_utterances
from oir.metrics import nmi
from oir.pipeline import PipelineConfig, ingest_batch, run_pipeline
from oir.store import Store

KNOWN = ["book_flight", "cancel_reservation", "upgrade_package", "reset_password"]


def main(utterances_path: str, gold_path: str, embeddings_path: str) -> None:
    utterances = load_utterances(utterances_path)
    with open(gold_path, encoding="utf-8") as f:
        gold = json.load(f)
    sidecar = load_embeddings(embeddings_path)

    train_ids = [u.id for u in utterances if gold[u.id] in KNOWN]
    detector = CentroidBoundaryDetector().fit(
        sidecar.matrix(train_ids), [gold[uid] for uid in train_ids]
    )

    with tempfile.TemporaryDirectory() as tmp:
        store = Store(tmp)
        lines = [json.dumps({"id": u.id, "text": u.text}) for u in utterances]
        job_id = ingest_batch(store, lines, PipelineConfig(seed=0))
        job = run_pipeline(store, job_id, detector, sidecar=sidecar)
        if job.status != "completed":
            raise SystemExit(f"pipeline failed: {job.error}")
        records = store.results(job_id)

    held = {uid for uid, lab in gold.items() if lab not in KNOWN}
    discovered = {r.utterance_id: r for r in records if r.source == "discovered"}
    pred = [discovered[uid].cluster_id for uid in sorted(held) if uid in discovered]
    truth = [gold[uid] for uid in sorted(held) if uid in discovered]
    score = nmi(pred, truth) if pred else 0.0
    print(
        json.dumps(
            {
                "nmi": score,
                "held_out": len(held),
                "discovered": len(discovered),
                "held_out_all_discovered": set(discovered) == held,
                "labels": sorted({r.label for r in discovered.values()}),
            }
        )
    )


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2], sys.argv[3])
