import itertools
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from oir.canonical import (
    CanonicalLabel,
    SynonymLexicon,
    canonicalize_label,
    load_synonyms,
    merge_labels,
    singularize,
)
from oir.errors import EmptyLabel, LexiconError

WORDLIST = (Path(__file__).parent / "data" / "wordlist.txt").read_text().split()


class TestSingularize:
    @pytest.mark.parametrize(
        "plural,singular",
        [
            ("flights", "flight"),
            ("queries", "query"),
            ("address", "address"),
            ("wolves", "wolf"),
            ("addresses", "address"),
            ("buses", "bus"),
            ("status", "status"),
            ("analysis", "analysis"),
            ("gas", "gas"),
            ("cards", "card"),
        ],
    )
    def test_cases(self, plural, singular):
        assert singularize(plural) == singular

    def test_idempotent_over_wordlist(self):
        for w in WORDLIST:
            once = singularize(w)
            assert singularize(once) == once, w


class TestSynonymLexicon:
    def test_self_canonical_enforced(self):
        with pytest.raises(LexiconError):
            SynonymLexicon({"a": "b", "b": "c"})

    def test_valid(self):
        lex = SynonymLexicon({"purchase": "buy"})
        assert lex.map("purchase") == "buy"
        assert lex.map("buy") == "buy"
        assert lex.map("other") == "other"

    def test_load_rejects_bad_rows(self, tmp_path):
        p = tmp_path / "syn.tsv"
        p.write_text("purchase\tbuy\nbroken row\n", encoding="utf-8")
        with pytest.raises(LexiconError) as err:
            load_synonyms(p)
        assert err.value.line_no == 2

    def test_load_rejects_non_self_canonical(self, tmp_path):
        p = tmp_path / "syn.tsv"
        p.write_text("a\tb\nb\tc\n", encoding="utf-8")
        with pytest.raises(LexiconError):
            load_synonyms(p)

    def test_load_rejects_unstable_canonical(self, tmp_path):
        # "tickets" singularizes to "ticket", so it cannot anchor a group
        p = tmp_path / "syn.tsv"
        p.write_text("seat\ttickets\n", encoding="utf-8")
        with pytest.raises(LexiconError):
            load_synonyms(p)

    def test_load_ok(self, tmp_path):
        p = tmp_path / "syn.tsv"
        p.write_text("purchase\tbuy\nacquire\tbuy\n", encoding="utf-8")
        lex = load_synonyms(p)
        assert lex.map("acquire") == "buy"


class TestCanonicalizeLabel:
    def test_rule_chain(self):
        c = canonicalize_label(["book", "flights"])
        assert list(c.tokens) == ["book", "flight"]
        assert c.display == "book_flight"

    def test_order_invariance(self):
        assert canonicalize_label(["flight", "book"]) == canonicalize_label(["book", "flights"])

    def test_synonym_map(self):
        syn = SynonymLexicon({"purchase": "buy"})
        c = canonicalize_label(["purchase", "tickets"], syn)
        assert c.display == "buy_ticket"

    def test_dedup(self):
        c = canonicalize_label(["flight", "flights"])
        assert c.display == "flight"

    def test_empty_rejected(self):
        with pytest.raises(EmptyLabel):
            canonicalize_label([])

    def test_idempotent_on_own_output(self):
        syn = SynonymLexicon({"purchase": "buy"})
        c = canonicalize_label(["purchases", "flights", "book"], syn)
        again = canonicalize_label(list(c.tokens), syn)
        assert again == c

    @given(st.lists(st.sampled_from(WORDLIST), min_size=1, max_size=4), st.data())
    @settings(max_examples=150, deadline=None)
    def test_permutation_invariance(self, tokens, data):
        perm = data.draw(st.permutations(tokens))
        assert canonicalize_label(tokens).display == canonicalize_label(list(perm)).display


class TestMergeLabels:
    def test_positional_variants_merge(self):
        groups = merge_labels(["book_flight", "book_flights", "flight_book"])
        assert list(groups) == ["book_flight"]
        assert groups["book_flight"] == ["book_flight", "book_flights", "flight_book"]

    def test_disjoint_labels_stay_apart(self):
        groups = merge_labels(["book_flight", "cancel_hotel"])
        assert len(groups) == 2

    def test_grouping_matches_pairwise_oracle(self):
        rng_words = ["book", "books", "flight", "flights", "cancel", "hotel", "hotels", "query", "queries"]
        import random

        rnd = random.Random(7)
        labels = ["_".join(rnd.sample(rng_words, 2)) for _ in range(50)]
        groups = merge_labels(labels)

        # oracle: brute-force pairwise equality of canonical forms
        def canon(lab):
            return canonicalize_label(lab.split("_")).display

        for members in groups.values():
            for a, b in itertools.combinations(members, 2):
                assert canon(a) == canon(b)
        flat = [lab for members in groups.values() for lab in members]
        assert sorted(flat) == sorted(labels)
        for g1, g2 in itertools.combinations(groups.values(), 2):
            assert canon(g1[0]) != canon(g2[0])

    def test_equivalence_relation_transitivity(self):
        import random

        rnd = random.Random(11)
        pool = WORDLIST[:40]
        labels = ["_".join(rnd.sample(pool, 2)) for _ in range(60)]
        groups = merge_labels(labels)

        def canon(lab):
            return canonicalize_label(lab.split("_")).display

        # reflexive + symmetric + transitive via the canonical-key partition
        for members in groups.values():
            keys = {canon(m) for m in members}
            assert len(keys) == 1

    def test_performance_budget_100k_under_1s(self):
        import time

        labels = [f"word{i % 97}_item{i % 89}s" for i in range(100_000)]
        start = time.perf_counter()
        groups = merge_labels(labels)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"canonicalization took {elapsed:.3f}s"
        assert sum(len(v) for v in groups.values()) == 100_000
