"""Document collections: JSONL loading, stratified splits, label distributions."""

from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass, field
from typing import Iterable

from .labels import BANDS, LabelError, LoELabel, parse_label


class CorpusError(ValueError):
    """Record-level corpus problem; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass
class Document:
    doc_id: str
    title: str
    abstract: str
    gold_loe: LoELabel | None = None
    assigned_loe: LoELabel | None = None

    @property
    def text(self) -> str:
        """Classification and indexing text: title + " " + abstract."""
        return f"{self.title} {self.abstract}"


@dataclass
class LabeledDataset:
    """Documents that all carry a gold label."""

    name: str
    docs: list[Document] = field(default_factory=list)

    def __post_init__(self):
        for doc in self.docs:
            if doc.gold_loe is None:
                raise CorpusError(f"document {doc.doc_id} has no gold label")

    def __len__(self) -> int:
        return len(self.docs)

    def labels(self) -> list[LoELabel]:
        return [doc.gold_loe for doc in self.docs]


def _parse_record(obj: dict, line: int) -> Document:
    if not isinstance(obj, dict):
        raise CorpusError("record is not a JSON object", line)
    doc_id = obj.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusError("missing or empty doc_id", line)
    title = obj.get("title")
    abstract = obj.get("abstract")
    if not isinstance(title, str) or not isinstance(abstract, str):
        raise CorpusError(f"doc {doc_id}: title and abstract must be strings", line)
    gold = None
    if "loe" in obj and obj["loe"] is not None:
        try:
            gold = parse_label(str(obj["loe"]))
        except LabelError as exc:
            raise CorpusError(f"doc {doc_id}: {exc}", line) from exc
    return Document(doc_id=doc_id, title=title, abstract=abstract, gold_loe=gold)


def load_corpus(path, on_error: str = "abort") -> list[Document]:
    """Read a JSONL corpus (doc_id, title, abstract, optional loe per line).

    on_error: "abort" raises on the first malformed record, "skip" warns and
    drops it. Duplicate doc_ids always abort.
    """
    if on_error not in ("abort", "skip"):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"invalid JSON ({exc.msg})", line_no) from exc
                doc = _parse_record(obj, line_no)
            except CorpusError as exc:
                if on_error == "abort":
                    raise
                warnings.warn(f"{path}: skipping {exc}", stacklevel=2)
                continue
            if doc.doc_id in seen:
                raise CorpusError(f"duplicate doc_id {doc.doc_id!r}", line_no)
            seen.add(doc.doc_id)
            docs.append(doc)
    return docs


def load_labeled(path, name: str | None = None, on_error: str = "abort") -> LabeledDataset:
    """Load a corpus where every record must carry a gold loe."""
    docs = []
    for doc in load_corpus(path, on_error=on_error):
        if doc.gold_loe is None:
            msg = f"doc {doc.doc_id} has no loe field"
            if on_error == "abort":
                raise CorpusError(msg)
            warnings.warn(f"{path}: skipping {msg}", stacklevel=2)
            continue
        docs.append(doc)
    return LabeledDataset(name=name or str(path), docs=docs)


def stratified_split(
    dataset: LabeledDataset,
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Deterministic per-class split into train/valid/test.

    Within each class the base allocation is floor(count * ratio); leftover
    items go round-robin train -> valid -> test, which maximizes training
    data. Classes smaller than the number of splits land in train first.
    """
    if any(r <= 0 for r in ratios):
        raise ValueError(f"ratios must be positive, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    by_band: dict[str, list[Document]] = {band: [] for band in BANDS}
    for doc in dataset.docs:
        by_band[doc.gold_loe.band].append(doc)
    rng = random.Random(seed)
    parts: tuple[list[Document], ...] = ([], [], [])
    for band in BANDS:
        items = by_band[band]
        if not items:
            continue
        if len(items) < len(parts):
            warnings.warn(
                f"class {band} has only {len(items)} item(s); assigning to train first",
                stacklevel=2,
            )
        rng.shuffle(items)
        # +1e-9 guards against 0.6*n landing a hair below the exact integer
        counts = [int(len(items) * r + 1e-9) for r in ratios]
        for i in range(len(items) - sum(counts)):
            counts[i % len(parts)] += 1
        start = 0
        for part, count in zip(parts, counts):
            part.extend(items[start : start + count])
            start += count
    train, valid, test = parts
    return (
        LabeledDataset(name=f"{dataset.name}/train", docs=train),
        LabeledDataset(name=f"{dataset.name}/valid", docs=valid),
        LabeledDataset(name=f"{dataset.name}/test", docs=test),
    )


def label_distribution(dataset: LabeledDataset) -> dict[str, float]:
    """Fraction of items per band; bands absent from the data are omitted."""
    if len(dataset) == 0:
        raise CorpusError(f"dataset {dataset.name!r} is empty")
    counts: dict[str, int] = {}
    for label in dataset.labels():
        counts[label.band] = counts.get(label.band, 0) + 1
    total = len(dataset)
    return {band: counts[band] / total for band in BANDS if band in counts}
