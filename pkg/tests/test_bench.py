import json

import pytest

from oir.bench import (
    DatasetSpec,
    SplitConfig,
    load_dataset,
    make_open_split,
    make_synthetic_dataset,
    report_filename,
    run_benchmark,
    write_report,
)
from oir.detection import UNKNOWN
from oir.errors import EmptyDataset, MissingColumn, TooFewClasses


def write_csv(path, rows, header="text,label"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")


class TestLoadDataset:
    def test_two_rows(self, tmp_path):
        p = tmp_path / "d.csv"
        write_csv(p, ["book a flight,book", "cancel it,cancel"])
        rows = load_dataset(DatasetSpec(name="d", path=str(p)))
        assert [u.id for u in rows] == ["0", "1"]
        assert rows[0].gold_label == "book"

    def test_missing_column(self, tmp_path):
        p = tmp_path / "d.csv"
        write_csv(p, ["book a flight,book"], header="text,intent")
        with pytest.raises(MissingColumn):
            load_dataset(DatasetSpec(name="d", path=str(p)))

    def test_custom_columns(self, tmp_path):
        p = tmp_path / "d.csv"
        write_csv(p, ["hi,greet"], header="utterance,intent")
        rows = load_dataset(
            DatasetSpec(name="d", path=str(p), text_column="utterance", label_column="intent")
        )
        assert rows[0].text == "hi"

    def test_label_trimmed(self, tmp_path):
        p = tmp_path / "d.csv"
        write_csv(p, ['book a flight,"book "', "cancel now,book"])
        rows = load_dataset(DatasetSpec(name="d", path=str(p)))
        assert rows[0].gold_label == rows[1].gold_label == "book"

    def test_empty(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("text,label\n", encoding="utf-8")
        with pytest.raises(EmptyDataset):
            load_dataset(DatasetSpec(name="d", path=str(p)))


class TestMakeOpenSplit:
    @pytest.fixture()
    def dataset(self):
        return make_synthetic_dataset(n_classes=4, rows_per_class=10, seed=0)

    def test_ratio_half(self, dataset):
        split = make_open_split(dataset, SplitConfig(known_class_ratio=0.5, seed=1))
        assert len(split.known_set) == 2
        assert len(split.unknown_set) == 2
        unknown_rows = [u for u in split.test if u.gold_label == UNKNOWN]
        assert unknown_rows
        for u in unknown_rows:
            assert split.original_gold[u.id] in split.unknown_set

    def test_ratio_one_no_unknowns(self, dataset):
        split = make_open_split(dataset, SplitConfig(known_class_ratio=1.0, seed=1))
        assert split.unknown_set == []
        assert all(u.gold_label != UNKNOWN for u in split.test)

    def test_deterministic(self, dataset):
        a = make_open_split(dataset, SplitConfig(known_class_ratio=0.5, seed=9))
        b = make_open_split(dataset, SplitConfig(known_class_ratio=0.5, seed=9))
        assert [u.id for u in a.train] == [u.id for u in b.train]
        assert [u.id for u in a.test] == [u.id for u in b.test]
        assert a.known_set == b.known_set

    def test_seed_changes_class_choice(self, dataset):
        picks = {
            tuple(make_open_split(dataset, SplitConfig(known_class_ratio=0.5, seed=s)).known_set)
            for s in range(8)
        }
        assert len(picks) > 1

    def test_disjoint_and_clean(self, dataset):
        split = make_open_split(dataset, SplitConfig(known_class_ratio=0.5, seed=2))
        train_ids = {u.id for u in split.train}
        test_ids = {u.id for u in split.test}
        assert not train_ids & test_ids
        assert train_ids | test_ids == {u.id for u in dataset}
        assert all(u.gold_label in split.known_set for u in split.train)

    def test_train_fraction(self, dataset):
        split = make_open_split(
            dataset, SplitConfig(known_class_ratio=1.0, train_fraction=0.7, seed=0)
        )
        # 4 classes * 10 rows, floor(0.7*10)=7 each
        assert len(split.train) == 28

    def test_too_few_classes(self):
        data = make_synthetic_dataset(n_classes=2, rows_per_class=5, seed=0)
        single = [u for u in data if u.gold_label == data[0].gold_label]
        with pytest.raises(TooFewClasses):
            make_open_split(single, SplitConfig(known_class_ratio=0.5))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SplitConfig(known_class_ratio=0.0)
        with pytest.raises(ValueError):
            SplitConfig(known_class_ratio=0.5, train_fraction=1.0)


class TestRunBenchmark:
    def test_separable_dataset_headline(self):
        dataset = make_synthetic_dataset(n_classes=6, rows_per_class=100, seed=0)
        report = run_benchmark(
            "synthetic", dataset, SplitConfig(known_class_ratio=2 / 3, seed=0)
        )
        assert report.detection.unknown_recall >= 0.95
        assert report.discovery is not None
        assert report.discovery["NMI"] >= 0.8
        assert report.discovery["k_true"] == 2
        assert report.detection.accuracy >= 0.95

    def test_ratio_one_marks_discovery_not_applicable(self):
        dataset = make_synthetic_dataset(n_classes=4, rows_per_class=20, seed=0)
        report = run_benchmark(
            "synthetic", dataset, SplitConfig(known_class_ratio=1.0, seed=0)
        )
        assert report.discovery is None
        assert report.to_dict()["discovery"] == {"applicable": False}
        assert "not applicable" in report.table()

    def test_same_seed_identical_modulo_timing(self):
        dataset = make_synthetic_dataset(n_classes=4, rows_per_class=30, seed=0)
        cfg = SplitConfig(known_class_ratio=0.5, seed=3)
        a = run_benchmark("synthetic", dataset, cfg).to_dict()
        b = run_benchmark("synthetic", dataset, cfg).to_dict()
        a.pop("timing")
        b.pop("timing")
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_report_file(self, tmp_path):
        dataset = make_synthetic_dataset(n_classes=4, rows_per_class=20, seed=0)
        report = run_benchmark("synth", dataset, SplitConfig(known_class_ratio=0.5, seed=1))
        path = write_report(report, tmp_path)
        assert path.name == report_filename("synth", 0.5, 1) == "bench_synth_0.5_1.json"
        doc = json.loads(path.read_text())
        assert doc["dataset"] == "synth"
        assert 0.0 <= doc["detection"]["accuracy"] <= 1.0
        assert doc["discovery"]["k_estimated"] >= 1

    def test_report_serialization_roundtrips(self):
        dataset = make_synthetic_dataset(n_classes=4, rows_per_class=15, seed=0)
        report = run_benchmark("synth", dataset, SplitConfig(known_class_ratio=0.5, seed=2))
        assert json.loads(report.to_json()) == report.to_dict()


class TestSyntheticGenerator:
    def test_disjoint_vocabularies(self):
        data = make_synthetic_dataset(n_classes=8, rows_per_class=5, seed=0)
        vocab_by_class = {}
        for u in data:
            vocab_by_class.setdefault(u.gold_label, set()).update(u.text.split())
        classes = list(vocab_by_class)
        for i, a in enumerate(classes):
            for b in classes[i + 1 :]:
                assert not vocab_by_class[a] & vocab_by_class[b]

    def test_constant_multiset_per_class(self):
        data = make_synthetic_dataset(n_classes=3, rows_per_class=10, seed=1)
        for label in {u.gold_label for u in data}:
            rows = [u for u in data if u.gold_label == label]
            multisets = {tuple(sorted(u.text.split())) for u in rows}
            assert len(multisets) == 1

    def test_row_count_and_ids(self):
        data = make_synthetic_dataset(n_classes=6, rows_per_class=100, seed=0)
        assert len(data) == 600
        assert [u.id for u in data] == [str(i) for i in range(600)]
