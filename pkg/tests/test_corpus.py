"""Corpus loading, validation, and the stratified split."""

import json

import pytest

from loesearch.corpus import (CorpusError, Document, LabeledDataset, label_distribution,
                              load_corpus, load_labeled, stratified_split)
from loesearch.labels import BANDS, parse_label


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")


class TestLoadCorpus:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            {"doc_id": "a", "title": "T", "abstract": "A", "loe": "1b"},
            {"doc_id": "b", "title": "", "abstract": "B"},
        ])
        docs = load_corpus(path)
        assert [d.doc_id for d in docs] == ["a", "b"]
        assert docs[0].gold_loe == parse_label("1b")
        assert docs[1].gold_loe is None
        assert docs[0].text == "T A"

    def test_error_carries_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"doc_id": "a", "title": "t", "abstract": "x"}\nnot json\n')
        with pytest.raises(CorpusError, match="line 2"):
            load_corpus(path)

    def test_missing_doc_id(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"title": "t", "abstract": "x"}])
        with pytest.raises(CorpusError, match="doc_id"):
            load_corpus(path)

    def test_bad_label_named_in_error(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"doc_id": "a", "title": "t", "abstract": "x", "loe": "5"}])
        with pytest.raises(CorpusError, match="5"):
            load_corpus(path)

    def test_skip_mode_warns_and_continues(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(
            '{"doc_id": "a", "title": "t", "abstract": "x"}\n'
            "broken\n"
            '{"doc_id": "b", "title": "t", "abstract": "y"}\n'
        )
        with pytest.warns(UserWarning):
            docs = load_corpus(path, on_error="skip")
        assert [d.doc_id for d in docs] == ["a", "b"]

    def test_duplicate_doc_id_always_fatal(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            {"doc_id": "a", "title": "t", "abstract": "x"},
            {"doc_id": "a", "title": "t", "abstract": "y"},
        ])
        with pytest.raises(CorpusError, match="duplicate"):
            load_corpus(path, on_error="skip")

    def test_load_labeled_requires_labels(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"doc_id": "a", "title": "t", "abstract": "x"}])
        with pytest.raises(CorpusError):
            load_labeled(path, name="c")


def make_dataset(counts, name="d"):
    docs = []
    for band, n in zip(BANDS, counts):
        for i in range(n):
            docs.append(Document(doc_id=f"{band}-{i}", title="t", abstract="x",
                                 gold_loe=parse_label(band)))
    return LabeledDataset(name=name, docs=docs)


class TestStratifiedSplit:
    def test_published_split_sizes(self):
        # 2816 documents at the published class distribution
        dataset = make_dataset((395, 505, 280, 675, 340, 195, 426))
        assert len(dataset.docs) == 2816
        train, valid, test = stratified_split(dataset, seed=0)
        assert (len(train.docs), len(valid.docs), len(test.docs)) == (1690, 563, 563)

    def test_partition_is_exact(self):
        dataset = make_dataset((10, 11, 12, 13, 14, 15, 16))
        train, valid, test = stratified_split(dataset, seed=3)
        ids = [d.doc_id for part in (train, valid, test) for d in part.docs]
        assert sorted(ids) == sorted(d.doc_id for d in dataset.docs)

    def test_per_class_proportions(self):
        dataset = make_dataset((50, 50, 50, 50, 50, 50, 50))
        train, valid, test = stratified_split(dataset, seed=1)
        for band in BANDS:
            n_train = sum(1 for d in train.docs if d.gold_loe.band == band)
            n_valid = sum(1 for d in valid.docs if d.gold_loe.band == band)
            n_test = sum(1 for d in test.docs if d.gold_loe.band == band)
            assert (n_train, n_valid, n_test) == (30, 10, 10)

    def test_deterministic_per_seed(self):
        dataset = make_dataset((9, 9, 9, 9, 9, 9, 9))
        a = stratified_split(dataset, seed=5)
        b = stratified_split(dataset, seed=5)
        c = stratified_split(dataset, seed=6)
        assert [d.doc_id for d in a[0].docs] == [d.doc_id for d in b[0].docs]
        assert [d.doc_id for d in a[0].docs] != [d.doc_id for d in c[0].docs]

    def test_tiny_class_warns(self):
        dataset = make_dataset((2, 9, 9, 9, 9, 9, 9))
        with pytest.warns(UserWarning):
            stratified_split(dataset, seed=0)

    def test_bad_ratios_rejected(self):
        dataset = make_dataset((9, 9, 9, 9, 9, 9, 9))
        with pytest.raises(ValueError):
            stratified_split(dataset, ratios=(0.5, 0.2, 0.2), seed=0)
        with pytest.raises(ValueError):
            stratified_split(dataset, ratios=(0.8, 0.2, 0.0), seed=0)


class TestLabelDistribution:
    def test_fractions(self):
        dataset = make_dataset((1, 1, 0, 0, 0, 0, 2))
        dist = label_distribution(dataset)
        assert dist == {"1a": 0.25, "1b": 0.25, "4": 0.5}

    def test_empty_dataset_errors(self):
        with pytest.raises(ValueError):
            label_distribution(LabeledDataset(name="e", docs=[]))
