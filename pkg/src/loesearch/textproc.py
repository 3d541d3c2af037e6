"""Text preprocessing: tokenization, TF-IDF features, chi-squared selection.

The tokenizer pipeline is lowercase -> ASCII fold -> split on
non-alphanumerics -> stopword removal -> Porter stemming, optionally
followed by all adjacent bigrams of the stemmed stream. The TF-IDF
variant is pinned exactly: weight = tf * (ln((1+N)/(1+df)) + 1), with
the final vector L2-normalized.
"""

from __future__ import annotations

import math
import re
import unicodedata
import warnings
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

from .stem import stem

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _load_default_stopwords() -> frozenset[str]:
    text = resources.files("loesearch.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_default_stopwords()


def load_stopwords(path) -> frozenset[str]:
    """Read a plain-text stopword list, one word per line."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())


def _ascii_fold(text: str) -> str:
    return unicodedata.normalize("NFKD", text).encode("ascii", "ignore").decode("ascii")


def tokenize(
    text: str,
    bigrams: bool = True,
    stopwords: frozenset[str] = STOPWORDS,
) -> list[str]:
    """Turn raw text into stemmed unigrams plus (optionally) adjacent bigrams."""
    unigrams = [
        stem(tok)
        for tok in _TOKEN_RE.findall(_ascii_fold(text.lower()))
        if tok not in stopwords
    ]
    if not bigrams:
        return unigrams
    return unigrams + [f"{a} {b}" for a, b in zip(unigrams, unigrams[1:])]


@dataclass(frozen=True)
class SparseVector:
    """Sorted (feature index, weight) pairs."""

    indices: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("feature indices must be strictly increasing")
        if any(not math.isfinite(w) for w in self.weights):
            raise ValueError("weights must be finite")

    def __len__(self) -> int:
        return len(self.indices)

    def items(self):
        return zip(self.indices, self.weights)


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict[str, int]  # term -> dense feature index
    document_frequency: dict[str, int]
    n_docs: int

    @property
    def n_features(self) -> int:
        return len(self.vocabulary)

    def idf(self, term: str) -> float:
        df = self.document_frequency[term]
        return math.log((1 + self.n_docs) / (1 + df)) + 1.0


def fit_tfidf(docs: Sequence[Sequence[str]], min_df: int = 2) -> TfidfModel:
    """Build the vocabulary over terms occurring in at least min_df documents."""
    df: dict[str, int] = {}
    n_docs = 0
    any_terms = False
    for terms in docs:
        n_docs += 1
        if terms:
            any_terms = True
        for term in set(terms):
            df[term] = df.get(term, 0) + 1
    if not any_terms:
        raise ValueError("cannot fit TF-IDF on an all-empty corpus")
    kept = sorted(t for t, c in df.items() if c >= min_df)
    vocabulary = {t: i for i, t in enumerate(kept)}
    return TfidfModel(
        vocabulary=vocabulary,
        document_frequency={t: df[t] for t in kept},
        n_docs=n_docs,
    )


def vectorize(model: TfidfModel, terms: Sequence[str]) -> SparseVector:
    """TF-IDF weights for one document, L2-normalized; OOV terms dropped."""
    tf: dict[int, int] = {}
    idf_by_index: dict[int, float] = {}
    for term in terms:
        idx = model.vocabulary.get(term)
        if idx is None:
            continue
        tf[idx] = tf.get(idx, 0) + 1
        if idx not in idf_by_index:
            idf_by_index[idx] = model.idf(term)
    indices = sorted(tf)
    raw = [tf[i] * idf_by_index[i] for i in indices]
    norm = math.sqrt(sum(w * w for w in raw))
    if norm > 0:
        raw = [w / norm for w in raw]
    return SparseVector(indices=tuple(indices), weights=tuple(raw))


def chi2_select(
    presence: Sequence[Iterable[int]],
    labels: Sequence[object],
    k: int,
    n_features: int | None = None,
) -> list[int]:
    """Top-k features by one-vs-rest chi-squared over 2x2 presence tables.

    `presence` gives, per document, the indices of features present in it.
    The statistic per (feature, class) is N*(ad-bc)^2 / ((a+b)(c+d)(a+c)(b+d))
    from the presence/class contingency table; a feature's score is the max
    over classes. Returns indices sorted by descending score, ties broken by
    ascending index.
    """
    if len(presence) != len(labels):
        raise ValueError("presence patterns and labels must have equal lengths")
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(labels)
    class_total: dict[object, int] = {}
    for lab in labels:
        class_total[lab] = class_total.get(lab, 0) + 1
    # per feature: total presence count and per-class presence count
    feat_total: dict[int, int] = {}
    feat_class: dict[tuple[int, object], int] = {}
    for pattern, lab in zip(presence, labels):
        for f in set(pattern):
            feat_total[f] = feat_total.get(f, 0) + 1
            feat_class[(f, lab)] = feat_class.get((f, lab), 0) + 1
    if n_features is None:
        n_features = max(feat_total, default=-1) + 1
    scores = [0.0] * n_features
    for f, present in feat_total.items():
        best = 0.0
        for lab, in_class in class_total.items():
            a = feat_class.get((f, lab), 0)
            b = present - a
            c = in_class - a
            d = n - present - c
            denom = (a + b) * (c + d) * (a + c) * (b + d)
            if denom > 0:
                stat = n * (a * d - b * c) ** 2 / denom
                if stat > best:
                    best = stat
        scores[f] = best
    if k > n_features:
        warnings.warn(
            f"requested {k} features but only {n_features} exist; returning all",
            stacklevel=2,
        )
        k = n_features
    ranked = sorted(range(n_features), key=lambda f: (-scores[f], f))
    return ranked[:k]
