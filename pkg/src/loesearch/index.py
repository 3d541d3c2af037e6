"""Inverted index with LoE assignments and band-filtered BM25 search."""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document
from .labels import LoELabel, from_ordinal
from .textproc import tokenize

MAGIC = b"LOEIDX1\n"
FORMAT_VERSION = 1
SNIPPET_CHARS = 240


@dataclass(frozen=True)
class BM25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError("k1 must be nonnegative")
        if not 0 <= self.b <= 1:
            raise ValueError("b must lie in [0, 1]")


class FilterBand(Enum):
    ALL = "all"
    LOE3_PLUS = "loe3"
    LOE2_PLUS = "loe2"
    LOE1 = "loe1"

    @property
    def admitted(self) -> frozenset[int]:
        return _ADMITTED[self]

    def admits(self, label: LoELabel) -> bool:
        return label.ordinal in _ADMITTED[self]

    @classmethod
    def parse(cls, text: str) -> "FilterBand":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown band {text!r}; expected one of all, loe3, loe2, loe1"
            ) from None


_ADMITTED = {
    FilterBand.ALL: frozenset(range(7)),
    FilterBand.LOE3_PLUS: frozenset(range(6)),
    FilterBand.LOE2_PLUS: frozenset(range(4)),
    FilterBand.LOE1: frozenset((0, 1)),
}


def band_filter(label: LoELabel, band: FilterBand) -> bool:
    return band.admits(label)


@dataclass(frozen=True)
class Hit:
    doc_id: str
    score: float
    label: LoELabel
    title: str | None = None
    snippet: str | None = None


@dataclass
class Index:
    params: BM25Params
    doc_ids: list[str]
    labels: list[LoELabel]
    lengths: np.ndarray
    avg_doc_length: float
    postings: dict[str, tuple[np.ndarray, np.ndarray]]  # term → (doc ids, tfs)
    titles: list[str] | None = None
    snippets: list[str] | None = None
    _position: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._position = {doc_id: i for i, doc_id in enumerate(self.doc_ids)}

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    def idf(self, term: str) -> float:
        entry = self.postings.get(term)
        df = len(entry[0]) if entry else 0
        return math.log((self.n_docs - df + 0.5) / (df + 0.5) + 1.0)


def build_index(
    docs: Iterable[Document],
    params: BM25Params = BM25Params(),
    store_text: bool = True,
) -> Index:
    """Index title+abstract unigrams; every document needs an LoE assignment."""
    doc_ids: list[str] = []
    labels: list[LoELabel] = []
    lengths: list[int] = []
    titles: list[str] = []
    snippets: list[str] = []
    postings: dict[str, dict[int, int]] = {}
    seen: set[str] = set()
    for doc in docs:
        if doc.assigned_loe is None:
            raise ValueError(f"document {doc.doc_id} has no LoE assignment")
        if doc.doc_id in seen:
            raise ValueError(f"duplicate doc_id {doc.doc_id}")
        seen.add(doc.doc_id)
        internal = len(doc_ids)
        doc_ids.append(doc.doc_id)
        labels.append(doc.assigned_loe)
        terms = tokenize(doc.text, bigrams=False)
        lengths.append(len(terms))
        titles.append(doc.title)
        snippets.append(doc.abstract[:SNIPPET_CHARS])
        for term in terms:
            bucket = postings.setdefault(term, {})
            bucket[internal] = bucket.get(internal, 0) + 1
    if not doc_ids:
        raise ValueError("cannot build an index over an empty collection")
    packed = {
        term: (
            np.fromiter(sorted(tfs), dtype=np.uint32, count=len(tfs)),
            np.fromiter((tfs[i] for i in sorted(tfs)), dtype=np.uint32, count=len(tfs)),
        )
        for term, tfs in postings.items()
    }
    length_arr = np.asarray(lengths, dtype=np.uint32)
    return Index(
        params=params,
        doc_ids=doc_ids,
        labels=labels,
        lengths=length_arr,
        avg_doc_length=float(length_arr.mean()),
        postings=packed,
        titles=titles if store_text else None,
        snippets=snippets if store_text else None,
    )


def _distinct(terms: Sequence[str]) -> list[str]:
    seen = {}
    for term in terms:
        seen.setdefault(term, None)
    return list(seen)


def _tf_part(tf: float, length: float, index: Index) -> float:
    k1, b = index.params.k1, index.params.b
    norm = 1.0 - b + b * length / index.avg_doc_length
    return tf * (k1 + 1.0) / (tf + k1 * norm)


def bm25_score(index: Index, query_terms: Sequence[str], doc: int) -> float:
    """Sum over distinct query terms in first-occurrence order."""
    score = 0.0
    length = float(index.lengths[doc])
    for term in _distinct(query_terms):
        entry = index.postings.get(term)
        if entry is None:
            continue
        ids, tfs = entry
        pos = int(np.searchsorted(ids, doc))
        if pos < len(ids) and ids[pos] == doc:
            score += index.idf(term) * _tf_part(float(tfs[pos]), length, index)
    return score


def search(index: Index, query: str, band: FilterBand, k: int) -> list[Hit]:
    """Top-k admitted documents by BM25, ties broken by ascending doc_id."""
    if k < 1:
        raise ValueError("k must be at least 1")
    terms = _distinct(tokenize(query, bigrams=False))
    scores: dict[int, float] = {}
    for term in terms:
        entry = index.postings.get(term)
        if entry is None:
            continue
        idf = index.idf(term)
        ids, tfs = entry
        for doc, tf in zip(ids.tolist(), tfs.tolist()):
            if index.labels[doc].ordinal not in band.admitted:
                continue
            part = idf * _tf_part(float(tf), float(index.lengths[doc]), index)
            scores[doc] = scores.get(doc, 0.0) + part
    ranked = sorted(scores.items(), key=lambda item: (-item[1], index.doc_ids[item[0]]))
    return [
        Hit(
            doc_id=index.doc_ids[doc],
            score=score,
            label=index.labels[doc],
            title=index.titles[doc] if index.titles else None,
            snippet=index.snippets[doc] if index.snippets else None,
        )
        for doc, score in ranked[:k]
    ]


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _write_block(fh, payload: bytes) -> None:
    fh.write(struct.pack("<I", len(payload)))
    fh.write(payload)


def _read_block(fh) -> bytes:
    (size,) = struct.unpack("<I", fh.read(4))
    return fh.read(size)


def save_index(index: Index, path) -> None:
    """Self-describing binary file; byte-identical for identical indexes."""
    header = {
        "format": FORMAT_VERSION,
        "k1": index.params.k1,
        "b": index.params.b,
        "n_docs": index.n_docs,
        "n_terms": len(index.postings),
        "avg_doc_length": index.avg_doc_length,
        "has_text": index.titles is not None,
    }
    doc_table = {
        "doc_ids": index.doc_ids,
        "labels": [label.ordinal for label in index.labels],
        "lengths": index.lengths.tolist(),
        "titles": index.titles,
        "snippets": index.snippets,
    }
    terms = sorted(index.postings)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        _write_block(fh, _json_bytes(header))
        _write_block(fh, _json_bytes(doc_table))
        _write_block(fh, _json_bytes(terms))
        for term in terms:
            ids, tfs = index.postings[term]
            fh.write(struct.pack("<I", len(ids)))
            fh.write(ids.astype("<u4").tobytes())
            fh.write(tfs.astype("<u4").tobytes())


def load_index(path) -> Index:
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path} is not an index file")
        header = json.loads(_read_block(fh))
        if header["format"] != FORMAT_VERSION:
            raise ValueError(f"unsupported index format {header['format']}")
        doc_table = json.loads(_read_block(fh))
        terms = json.loads(_read_block(fh))
        postings = {}
        for term in terms:
            (count,) = struct.unpack("<I", fh.read(4))
            ids = np.frombuffer(fh.read(4 * count), dtype="<u4").astype(np.uint32)
            tfs = np.frombuffer(fh.read(4 * count), dtype="<u4").astype(np.uint32)
            postings[term] = (ids, tfs)
    return Index(
        params=BM25Params(k1=header["k1"], b=header["b"]),
        doc_ids=doc_table["doc_ids"],
        labels=[from_ordinal(o) for o in doc_table["labels"]],
        lengths=np.asarray(doc_table["lengths"], dtype=np.uint32),
        avg_doc_length=header["avg_doc_length"],
        postings=postings,
        titles=doc_table["titles"],
        snippets=doc_table["snippets"],
    )
