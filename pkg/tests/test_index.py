"""Inverted index construction, band filtering, BM25 ranking, serialization."""

import math

import numpy as np
import pytest

from loesearch.corpus import Document
from loesearch.index import (BM25Params, FilterBand, Hit, band_filter, bm25_score,
                             build_index, load_index, save_index, search)
from loesearch.labels import from_ordinal, parse_label
from loesearch.textproc import tokenize

from oracles import bm25_brute_search
from synth import labeled_corpus


def doc(doc_id, text, band, title="t"):
    return Document(doc_id, title, text, assigned_loe=parse_label(band))


def tiny_index(**kwargs):
    docs = [
        doc("d1", "randomized trial of insulin", "1b", title="alpha"),
        doc("d2", "cohort insulin registry follow", "2b", title="beta"),
        doc("d3", "case report insulin clinic", "4", title="gamma"),
    ]
    return build_index(docs, **kwargs), docs


class TestFilterBand:
    def test_admitted_sets(self):
        assert FilterBand.ALL.admitted == frozenset(range(7))
        assert FilterBand.LOE3_PLUS.admitted == frozenset(range(6))
        assert FilterBand.LOE2_PLUS.admitted == frozenset(range(4))
        assert FilterBand.LOE1.admitted == frozenset((0, 1))

    def test_band_truth_table(self):
        want = {
            "all": [True] * 7,
            "loe3": [True] * 6 + [False],
            "loe2": [True] * 4 + [False] * 3,
            "loe1": [True] * 2 + [False] * 5,
        }
        for value, row in want.items():
            band = FilterBand.parse(value)
            got = [band_filter(from_ordinal(o), band) for o in range(7)]
            assert got == row

    def test_parse_normalizes(self):
        assert FilterBand.parse(" LOE2 ") is FilterBand.LOE2_PLUS

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError, match="unknown band"):
            FilterBand.parse("loe5")


class TestBuild:
    def test_postings_counts(self):
        index, _ = tiny_index()
        ids, tfs = index.postings["insulin"]
        assert ids.tolist() == [0, 1, 2]
        assert tfs.tolist() == [1, 1, 1]
        ids, tfs = index.postings["cohort"]
        assert ids.tolist() == [1]

    def test_title_terms_indexed(self):
        index, _ = tiny_index()
        assert "alpha" in index.postings

    def test_stopwords_and_stems(self):
        index, _ = tiny_index()
        assert "of" not in index.postings
        assert "random" in index.postings  # randomized stems down

    def test_no_bigrams_in_postings(self):
        index, _ = tiny_index()
        assert not any(" " in term for term in index.postings)

    def test_lengths_and_average(self):
        index, docs = tiny_index()
        want = [len(tokenize(d.text, bigrams=False)) for d in docs]
        assert index.lengths.tolist() == want
        assert index.avg_doc_length == pytest.approx(sum(want) / 3)

    def test_duplicate_doc_id_rejected(self):
        docs = [doc("d1", "one", "1a"), doc("d1", "two", "1a")]
        with pytest.raises(ValueError, match="duplicate"):
            build_index(docs)

    def test_missing_assignment_rejected(self):
        bad = Document("d9", "t", "text")
        with pytest.raises(ValueError, match="no LoE assignment"):
            build_index([bad])

    def test_empty_collection_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            build_index([])

    def test_snippets_truncated(self):
        long = doc("d1", "word " * 200, "1a")
        index = build_index([long])
        assert len(index.snippets[0]) == 240

    def test_store_text_off(self):
        index, _ = tiny_index(store_text=False)
        assert index.titles is None and index.snippets is None

    def test_params_validated(self):
        with pytest.raises(ValueError):
            BM25Params(k1=-0.1)
        with pytest.raises(ValueError):
            BM25Params(b=1.5)


class TestScoring:
    def test_idf_single_doc_of_two(self):
        docs = [doc("d1", "insulin blah", "1a"), doc("d2", "insulin gap", "1a")]
        index = build_index(docs)
        # df=n/2 with the +1 floor: ln((2-1+0.5)/(1+0.5)+1) = ln 2
        assert index.idf("blah") == pytest.approx(math.log(2.0))

    def test_idf_unseen_term(self):
        index, _ = tiny_index()
        assert index.idf("zzz") == pytest.approx(math.log((3 + 0.5) / 0.5 + 1.0))

    def test_score_hand_computed(self):
        docs = [doc("d1", "insulin blah", "1a"), doc("d2", "insulin gap", "1a")]
        index = build_index(docs)
        # equal lengths: tf-part = 1*(2.2)/(1+1.2) = 1, score = idf
        assert bm25_score(index, ["blah"], 0) == pytest.approx(math.log(2.0))

    def test_repeated_query_term_counted_once(self):
        index, _ = tiny_index()
        once = bm25_score(index, ["insulin"], 0)
        thrice = bm25_score(index, ["insulin", "insulin", "insulin"], 0)
        assert once == thrice

    def test_search_matches_bm25_score(self):
        index, _ = tiny_index()
        hits = search(index, "insulin cohort", FilterBand.ALL, k=3)
        terms = tokenize("insulin cohort", bigrams=False)
        for hit in hits:
            internal = index.doc_ids.index(hit.doc_id)
            assert hit.score == pytest.approx(bm25_score(index, terms, internal))

    def test_only_matching_docs_returned(self):
        index, _ = tiny_index()
        hits = search(index, "cohort", FilterBand.ALL, k=10)
        assert [h.doc_id for h in hits] == ["d2"]

    def test_k_truncates(self):
        index, _ = tiny_index()
        assert len(search(index, "insulin", FilterBand.ALL, k=2)) == 2

    def test_k_below_one_rejected(self):
        index, _ = tiny_index()
        with pytest.raises(ValueError):
            search(index, "insulin", FilterBand.ALL, k=0)

    def test_tie_order_by_doc_id(self):
        docs = [doc("z9", "insulin alone", "1a"), doc("a1", "insulin alone", "1a")]
        index = build_index(docs)
        hits = search(index, "insulin", FilterBand.ALL, k=2)
        assert hits[0].score == pytest.approx(hits[1].score)
        assert [h.doc_id for h in hits] == ["a1", "z9"]

    def test_hits_carry_label_and_text(self):
        index, _ = tiny_index()
        hit = search(index, "cohort", FilterBand.ALL, k=1)[0]
        assert hit == Hit("d2", hit.score, parse_label("2b"), "beta",
                          "cohort insulin registry follow")


class TestBandFiltering:
    def test_hard_filter_drops_excluded(self):
        index, _ = tiny_index()
        assert {h.doc_id for h in search(index, "insulin", FilterBand.ALL, 10)} \
            == {"d1", "d2", "d3"}
        assert {h.doc_id for h in search(index, "insulin", FilterBand.LOE2_PLUS, 10)} \
            == {"d1", "d2"}
        assert {h.doc_id for h in search(index, "insulin", FilterBand.LOE1, 10)} \
            == {"d1"}

    def test_scores_unchanged_by_band(self):
        """df and average length stay global, so admitted scores never move."""
        index, _ = tiny_index()
        all_scores = {h.doc_id: h.score
                      for h in search(index, "insulin trial", FilterBand.ALL, 10)}
        for band in (FilterBand.LOE3_PLUS, FilterBand.LOE2_PLUS, FilterBand.LOE1):
            for hit in search(index, "insulin trial", band, 10):
                assert hit.score == all_scores[hit.doc_id]

    def test_tighter_band_returns_subset(self):
        dataset = labeled_corpus(per_band=10, seed=3)
        for d in dataset.docs:
            d.assigned_loe = d.gold_loe
        index = build_index(dataset.docs)
        order = (FilterBand.ALL, FilterBand.LOE3_PLUS, FilterBand.LOE2_PLUS,
                 FilterBand.LOE1)
        for query in ("diabetes treatment", "randomized trial", "case report"):
            previous = None
            for band in order:
                ids = {h.doc_id for h in search(index, query, band, k=1000)}
                if previous is not None:
                    assert ids <= previous
                previous = ids


class TestOracleEquivalence:
    def test_random_corpora_match_brute_force(self):
        rng = np.random.default_rng(42)
        vocab = [f"w{i}" for i in range(60)]
        for trial in range(25):
            n = int(rng.integers(2, 30))
            docs = []
            for i in range(n):
                words = rng.choice(vocab, size=int(rng.integers(3, 40)))
                docs.append(doc(f"d{i:03d}", " ".join(words),
                                from_ordinal(int(rng.integers(0, 7))).band))
            index = build_index(docs)
            tokens = [tokenize(d.text, bigrams=False) for d in docs]
            ordinals = [d.assigned_loe.ordinal for d in docs]
            ids = [d.doc_id for d in docs]
            query = " ".join(rng.choice(vocab, size=int(rng.integers(1, 5))))
            q_tokens = tokenize(query, bigrams=False)
            for band in FilterBand:
                got = search(index, query, band, k=10)
                want = bm25_brute_search(tokens, ids, ordinals, q_tokens,
                                         band.admitted, k=10)
                assert [(h.doc_id, h.score) for h in got] == [
                    (d_id, pytest.approx(s, abs=1e-12)) for d_id, s in want]


class TestSerialization:
    def test_round_trip_preserves_search(self, tmp_path):
        index, _ = tiny_index()
        path = tmp_path / "idx.bin"
        save_index(index, path)
        loaded = load_index(path)
        for band in FilterBand:
            got = search(loaded, "insulin trial cohort", band, 10)
            want = search(index, "insulin trial cohort", band, 10)
            assert got == want

    def test_rebuild_is_byte_identical(self, tmp_path):
        index, docs = tiny_index()
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        save_index(index, a)
        save_index(build_index(docs), b)
        assert a.read_bytes() == b.read_bytes()

    def test_save_load_save_is_byte_identical(self, tmp_path):
        index, _ = tiny_index()
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        save_index(index, a)
        save_index(load_index(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_magic_checked(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTANIDX" + b"\x00" * 16)
        with pytest.raises(ValueError, match="not an index file"):
            load_index(path)

    def test_params_survive(self, tmp_path):
        docs = [doc("d1", "insulin", "1a")]
        index = build_index(docs, params=BM25Params(k1=0.9, b=0.4))
        path = tmp_path / "idx.bin"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.params == BM25Params(k1=0.9, b=0.4)
