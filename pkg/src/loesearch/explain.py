"""Local surrogate explanations via random term masking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .labels import BANDS


@dataclass(frozen=True)
class Explanation:
    doc_id: str
    term_weights: dict[str, list[tuple[str, float]]]  # band → (term, weight) desc


def _distinct(terms: Sequence[str]) -> list[str]:
    seen = {}
    for term in terms:
        seen.setdefault(term, None)
    return list(seen)


def explain(
    classify: Callable[[list[str]], dict[str, float]],
    doc_id: str,
    terms: Sequence[str],
    n_samples: int = 500,
    kernel_width: float = 0.75,
    seed: int = 0,
) -> Explanation:
    """Fit one weighted linear surrogate per band over term-masking samples.

    A mask keeps or removes every occurrence of a distinct term; the sample
    weight is exp(-(1-s)^2 / kernel_width^2) with s the fraction of distinct
    terms retained.
    """
    features = _distinct(terms)
    if not features:
        raise ValueError("cannot explain a document with no terms")
    rng = np.random.default_rng(seed)
    m = len(features)
    masks = rng.integers(0, 2, size=(n_samples, m)).astype(np.float64)
    responses = np.empty((n_samples, len(BANDS)))
    for i in range(n_samples):
        kept = {features[j] for j in range(m) if masks[i, j]}
        confidences = classify([t for t in terms if t in kept])
        responses[i] = [confidences[band] for band in BANDS]
    retained = masks.mean(axis=1)
    weights = np.exp(-np.square(1.0 - retained) / kernel_width**2)
    sq = np.sqrt(weights)[:, None]
    design = np.hstack([np.ones((n_samples, 1)), masks])
    coef, *_ = np.linalg.lstsq(design * sq, responses * sq, rcond=None)
    term_weights = {}
    for c, band in enumerate(BANDS):
        band_coef = coef[1:, c]
        order = np.argsort(-band_coef, kind="stable")
        term_weights[band] = [(features[j], float(band_coef[j])) for j in order]
    return Explanation(doc_id, term_weights)


def aggregate_term_scores(
    explanations: Sequence[Explanation], top_k: int = 10
) -> dict[str, list[tuple[str, float]]]:
    """Per band, sum each term's weight across documents; keep the top_k."""
    if not explanations:
        raise ValueError("aggregate_term_scores requires at least one explanation")
    totals: dict[str, dict[str, float]] = {band: {} for band in BANDS}
    for explanation in explanations:
        for band, pairs in explanation.term_weights.items():
            bucket = totals[band]
            for term, weight in pairs:
                bucket[term] = bucket.get(term, 0.0) + weight
    return {
        band: sorted(bucket.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
        for band, bucket in totals.items()
    }
