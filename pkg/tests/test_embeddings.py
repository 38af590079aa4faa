import json

import numpy as np
import pytest

from oir.embeddings import (
    EmbeddingMatrix,
    Utterance,
    load_embeddings,
    read_utterances,
    save_embeddings,
)
from oir.errors import DimMismatch, DuplicateId, EmptyBatch, ParseError


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadEmbeddings:
    def test_single_row(self, tmp_path):
        p = tmp_path / "e.jsonl"
        write_lines(p, ['{"id":"u1","vector":[0.0,1.0]}'])
        m = load_embeddings(p)
        assert m.dim == 2
        assert np.array_equal(m["u1"], [0.0, 1.0])

    def test_dim_mismatch_line_number(self, tmp_path):
        p = tmp_path / "e.jsonl"
        write_lines(p, ['{"id":"u1","vector":[0.0,1.0]}', '{"id":"u2","vector":[1,2,3]}'])
        with pytest.raises(DimMismatch) as err:
            load_embeddings(p)
        assert "line 2" in str(err.value)

    def test_duplicate_id(self, tmp_path):
        p = tmp_path / "e.jsonl"
        write_lines(p, ['{"id":"u1","vector":[0.0]}', '{"id":"u1","vector":[1.0]}'])
        with pytest.raises(DuplicateId):
            load_embeddings(p)

    def test_parse_error_line_number(self, tmp_path):
        p = tmp_path / "e.jsonl"
        write_lines(p, ['{"id":"u1","vector":[0.0]}', "{nope"])
        with pytest.raises(ParseError) as err:
            load_embeddings(p)
        assert err.value.line_no == 2

    def test_non_numeric_vector(self, tmp_path):
        p = tmp_path / "e.jsonl"
        write_lines(p, ['{"id":"u1","vector":["a"]}'])
        with pytest.raises(ParseError):
            load_embeddings(p)

    def test_nonfinite_rejected(self, tmp_path):
        p = tmp_path / "e.jsonl"
        write_lines(p, ['{"id":"u1","vector":[1e999]}'])
        with pytest.raises(ParseError):
            load_embeddings(p)

    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(7)
        m = EmbeddingMatrix({f"u{i}": rng.standard_normal(5) for i in range(20)})
        p = tmp_path / "e.jsonl"
        save_embeddings(m, p)
        again = load_embeddings(p)
        assert again.ids() == m.ids()
        for uid in m.ids():
            assert np.array_equal(again[uid], m[uid])
        # a second save produces identical bytes
        p2 = tmp_path / "e2.jsonl"
        save_embeddings(again, p2)
        assert p.read_bytes() == p2.read_bytes()


class TestEmbeddingMatrix:
    def test_dim_enforced(self):
        with pytest.raises(DimMismatch):
            EmbeddingMatrix({"a": np.zeros(2), "b": np.zeros(3)})

    def test_rows_immutable(self):
        m = EmbeddingMatrix({"a": np.zeros(2)})
        with pytest.raises(ValueError):
            m["a"][0] = 1.0

    def test_subset_and_matrix_order(self):
        m = EmbeddingMatrix({"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [1.0, 1.0]})
        sub = m.subset(["c", "a"])
        assert sub.ids() == ["c", "a"]
        assert np.array_equal(m.matrix(["b", "a"]), [[0.0, 1.0], [1.0, 0.0]])


class TestReadUtterances:
    def test_basic(self):
        utts = read_utterances(['{"id":"a","text":"book it"}', '{"id":"b","text":"pay","label":"x"}'])
        assert utts[0] == Utterance(id="a", text="book it")
        assert utts[1].gold_label == "x"

    def test_duplicate_id(self):
        with pytest.raises(DuplicateId):
            read_utterances(['{"id":"a","text":"x"}', '{"id":"a","text":"y"}'])

    def test_empty_batch(self):
        with pytest.raises(EmptyBatch):
            read_utterances([])

    def test_blank_text_rejected(self):
        with pytest.raises(ParseError):
            read_utterances(['{"id":"a","text":"   "}'])

    def test_invalid_json_line_number(self):
        with pytest.raises(ParseError) as err:
            read_utterances(['{"id":"a","text":"x"}', "oops"])
        assert err.value.line_no == 2
