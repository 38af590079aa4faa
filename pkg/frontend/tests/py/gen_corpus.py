"""Write the synthetic 6-intent corpus as utterance JSONL plus a gold map."""
import json
import sys

from oir.bench import make_synthetic_dataset


def main(out_jsonl: str, out_gold: str, n_classes: int = 6, rows: int = 100) -> None:
    data = make_synthetic_dataset(n_classes=n_classes, rows_per_class=rows, seed=0)
    with open(out_jsonl, "w", encoding="utf-8") as f:
        for u in data:
            f.write(json.dumps({"id": u.id, "text": u.text}) + "\n")
    with open(out_gold, "w", encoding="utf-8") as f:
        json.dump({u.id: u.gold_label for u in data}, f)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2], *(int(a) for a in sys.argv[3:]))
