"""LoE prediction: forest baseline, adapters, ensembles, model persistence."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import CorpusError, LabeledDataset
from .forest import RandomForest
from .labels import BANDS, LabelError, LoELabel, from_ordinal, parse_label
from .textproc import SparseVector, TfidfModel, chi2_select, fit_tfidf, tokenize, vectorize

MODEL_FORMAT = "loesearch-model/1"


def _argmax_band(scores: dict[str, float]) -> LoELabel:
    """Highest-scored band present; ties resolve toward the lower ordinal."""
    best = None
    for ordinal, band in enumerate(BANDS):
        if band not in scores:
            continue
        score = scores[band]
        if best is None or score > best[0]:
            best = (score, ordinal)
    return from_ordinal(best[1])


@dataclass(frozen=True)
class Prediction:
    doc_id: str
    confidences: dict[str, float]
    chosen: LoELabel
    source: str

    def __post_init__(self):
        if set(self.confidences) != set(BANDS):
            raise ValueError("confidences must cover exactly the seven bands")
        for band, score in self.confidences.items():
            if not math.isfinite(score):
                raise ValueError(f"non-finite confidence for band {band}")
        if self.chosen != _argmax_band(self.confidences):
            raise ValueError("chosen label must be the confidence argmax")


def make_prediction(doc_id: str, confidences: dict[str, float], source: str) -> Prediction:
    return Prediction(doc_id, dict(confidences), _argmax_band(confidences), source)


@dataclass(frozen=True)
class RegressionPrediction:
    doc_id: str
    raw: float

    def __post_init__(self):
        if not math.isfinite(self.raw):
            raise ValueError("raw value must be finite")


def regression_to_label(p: RegressionPrediction) -> LoELabel:
    """Round half away from zero, then clamp into the ordinal range."""
    rounded = math.floor(p.raw + 0.5) if p.raw >= 0 else math.ceil(p.raw - 0.5)
    return from_ordinal(min(6, max(0, rounded)))


def multilabel_to_label(scores: dict[str, float], threshold: float = 0.5) -> LoELabel:
    if set(scores) != set(BANDS):
        raise ValueError("scores must cover exactly the seven bands")
    positive = {b: s for b, s in scores.items() if s >= threshold}
    return _argmax_band(positive or scores)


def majority_vote(votes: Sequence[tuple[LoELabel, float]]) -> LoELabel:
    """Most frequent band; ties by highest confidence among tied bands, then ordinal."""
    if not votes:
        raise ValueError("majority_vote requires at least one vote")
    counts = [0] * len(BANDS)
    top_conf = [-math.inf] * len(BANDS)
    for label, confidence in votes:
        counts[label.ordinal] += 1
        top_conf[label.ordinal] = max(top_conf[label.ordinal], confidence)
    best_count = max(counts)
    tied = [o for o in range(len(BANDS)) if counts[o] == best_count]
    best_conf = max(top_conf[o] for o in tied)
    for o in tied:
        if top_conf[o] == best_conf:
            return from_ordinal(o)


def import_external_predictions(path) -> list[Prediction | RegressionPrediction]:
    """Load JSONL predictions; each record carries either confidences or raw."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                out.append(_parse_prediction(record))
            except (ValueError, LabelError, TypeError, KeyError) as exc:
                raise CorpusError(f"line {lineno}: {exc}", lineno) from exc
    return out


def _parse_prediction(record: dict) -> Prediction | RegressionPrediction:
    doc_id = record.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise ValueError("missing or empty doc_id")
    if "confidences" in record:
        confidences = record["confidences"]
        for band in confidences:
            parse_label(band)
        source = record.get("source", "external")
        return make_prediction(doc_id, {b: float(s) for b, s in confidences.items()}, source)
    if "raw" in record:
        return RegressionPrediction(doc_id, float(record["raw"]))
    raise ValueError("record must carry either confidences or raw")


def prediction_label(p: Prediction | RegressionPrediction) -> tuple[LoELabel, float]:
    """Vote view of any prediction: (label, confidence in that label)."""
    if isinstance(p, Prediction):
        return p.chosen, p.confidences[p.chosen.band]
    return regression_to_label(p), 0.0


class LoEPipeline:
    """Tokenize → tf-idf → chi2-selected features → random forest."""

    def __init__(self, tfidf: TfidfModel, selected: list[int], forest: RandomForest,
                 source: str = "forest-baseline"):
        self.tfidf = tfidf
        self.selected = selected
        self.forest = forest
        self.source = source
        self._column = {feature: i for i, feature in enumerate(selected)}

    def _densify(self, vector: SparseVector) -> np.ndarray:
        row = np.zeros(len(self.selected))
        for index, weight in vector.items():
            col = self._column.get(index)
            if col is not None:
                row[col] = weight
        return row

    def vectorize_text(self, text: str) -> SparseVector:
        return vectorize(self.tfidf, tokenize(text))

    def predict_vector(self, doc_id: str, vector: SparseVector,
                       abstain_below: float | None = None) -> Prediction | None:
        row = self._densify(vector)
        if not row.any():
            probs = self.forest.root_distribution()
        else:
            probs = self.forest.predict_proba(row[None, :])[0]
        confidences = {band: float(probs[o]) for o, band in enumerate(BANDS)}
        if abstain_below is not None and max(confidences.values()) < abstain_below:
            return None
        return make_prediction(doc_id, confidences, self.source)

    def predict_text(self, doc_id: str, text: str,
                     abstain_below: float | None = None) -> Prediction | None:
        return self.predict_vector(doc_id, self.vectorize_text(text), abstain_below)

    def confidence_fn(self, terms: list[str]) -> dict[str, float]:
        """Classifier view over a term sequence, as the explainer consumes it."""
        prediction = self.predict_vector("_", vectorize(self.tfidf, terms))
        return prediction.confidences

    def save(self, path) -> None:
        payload = {
            "format": MODEL_FORMAT,
            "source": self.source,
            "tfidf": {
                "vocabulary": sorted(self.tfidf.vocabulary, key=self.tfidf.vocabulary.get),
                "document_frequency": [self.tfidf.document_frequency[t] for t in
                                       sorted(self.tfidf.vocabulary, key=self.tfidf.vocabulary.get)],
                "n_docs": self.tfidf.n_docs,
            },
            "selected": self.selected,
            "forest": self.forest.to_dict(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "LoEPipeline":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format: {payload.get('format')!r}")
        terms = payload["tfidf"]["vocabulary"]
        tfidf = TfidfModel(
            vocabulary={t: i for i, t in enumerate(terms)},
            document_frequency=dict(zip(terms, payload["tfidf"]["document_frequency"])),
            n_docs=payload["tfidf"]["n_docs"],
        )
        return cls(tfidf, list(payload["selected"]),
                   RandomForest.from_dict(payload["forest"]), payload["source"])


def train_baseline(vectors: Sequence[SparseVector], labels: Sequence[LoELabel],
                   n_features: int, trees: int = 200, max_depth: int | None = None,
                   features_per_split: int | None = None, seed: int = 0) -> RandomForest:
    """Fit the bagged-tree baseline on already-vectorized documents."""
    if len(vectors) != len(labels):
        raise ValueError("vectors and labels must align")
    X = np.zeros((len(vectors), n_features))
    for i, vector in enumerate(vectors):
        for index, weight in vector.items():
            X[i, index] = weight
    y = np.array([label.ordinal for label in labels])
    forest = RandomForest(n_trees=trees, max_depth=max_depth,
                          features_per_split=features_per_split, seed=seed)
    return forest.fit(X, y, n_classes=len(BANDS))


def train_pipeline(dataset: LabeledDataset, select_k: int = 2000, trees: int = 200,
                   max_depth: int | None = None, features_per_split: int | None = None,
                   min_df: int = 2, seed: int = 0) -> LoEPipeline:
    """Train the full text pipeline on a labeled corpus."""
    term_lists = [tokenize(doc.text) for doc in dataset.docs]
    tfidf = fit_tfidf(term_lists, min_df=min_df)
    vectors = [vectorize(tfidf, terms) for terms in term_lists]
    n_vocab = len(tfidf.vocabulary)
    presence = [list(v.indices) for v in vectors]
    labels = [doc.gold_loe.ordinal for doc in dataset.docs]
    selected = chi2_select(presence, labels, min(select_k, n_vocab), n_features=n_vocab)
    column = {feature: i for i, feature in enumerate(selected)}
    X = np.zeros((len(vectors), len(selected)))
    for i, vector in enumerate(vectors):
        for index, weight in vector.items():
            col = column.get(index)
            if col is not None:
                X[i, col] = weight
    y = np.array(labels)
    forest = RandomForest(n_trees=trees, max_depth=max_depth,
                          features_per_split=features_per_split, seed=seed)
    forest.fit(X, y, n_classes=len(BANDS))
    return LoEPipeline(tfidf, selected, forest)
