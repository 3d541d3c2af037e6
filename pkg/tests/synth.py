"""Synthetic corpora with planted band vocabularies and relevance structure."""

from __future__ import annotations

import random

from loesearch.corpus import Document, LabeledDataset
from loesearch.labels import BANDS, parse_label

BAND_MARKERS = {
    "1a": ["systematic", "review", "pooled", "cochrane"],
    "1b": ["randomized", "controlled", "placebo", "blinded"],
    "2a": ["nonrandomized", "prospective", "allocation", "quasirandom"],
    "2b": ["cohort", "followup", "longitudinal", "incidence"],
    "3a": ["casecontrol", "retrospective", "odds", "matched"],
    "3b": ["crosssectional", "survey", "prevalence", "sampling"],
    "4": ["caseseries", "casereport", "anecdotal", "singlepatient"],
}

FILLERS = [
    "patients", "treatment", "therapy", "outcomes", "hospital", "clinical",
    "disease", "diagnosis", "mortality", "intervention", "baseline", "enrolled",
]

CONDITIONS = [
    "melanoma", "asthma", "diabetes", "glaucoma", "migraine",
    "psoriasis", "epilepsy", "anemia", "sepsis", "arthritis",
    "dementia", "hepatitis", "lymphoma", "stroke", "pneumonia",
    "eczema", "insomnia", "obesity", "scoliosis", "vertigo",
]

MEDLINE_LIKE = {"1a": 0.07, "1b": 0.07, "2a": 0.10, "2b": 0.19,
                "3a": 0.09, "3b": 0.07, "4": 0.41}

# P(relevant | band) for topic-matching docs; falls with weaker evidence
RELEVANCE_BY_BAND = {"1a": 0.95, "1b": 0.90, "2a": 0.55, "2b": 0.45,
                     "3a": 0.25, "3b": 0.20, "4": 0.05}


def make_doc(doc_id: str, band: str, condition: str, rng: random.Random,
             marker_count: int = 4, filler_count: int = 6) -> Document:
    markers = rng.choices(BAND_MARKERS[band], k=marker_count)
    fillers = rng.choices(FILLERS, k=filler_count)
    words = markers + fillers + [condition] * rng.randint(1, 3)
    rng.shuffle(words)
    title = f"{markers[0]} assessment of {condition}"
    return Document(doc_id=doc_id, title=title, abstract=" ".join(words),
                    gold_loe=parse_label(band), assigned_loe=parse_label(band))


def labeled_corpus(per_band: int = 30, seed: int = 0, name: str = "synth") -> LabeledDataset:
    """Separable corpus: every band has its own marker vocabulary."""
    rng = random.Random(seed)
    docs = []
    for band in BANDS:
        for i in range(per_band):
            condition = rng.choice(CONDITIONS)
            docs.append(make_doc(f"{band}-{i}", band, condition, rng))
    return LabeledDataset(name=name, docs=docs)


def noisy_corpus(per_band: int = 60, seed: int = 0, marker_rate: float = 0.7,
                 name: str = "noisy") -> LabeledDataset:
    """Markers leak across bands and are present only at marker_rate."""
    rng = random.Random(seed)
    docs = []
    for band in BANDS:
        for i in range(per_band):
            condition = rng.choice(CONDITIONS)
            words = []
            for _ in range(4):
                if rng.random() < marker_rate:
                    words.append(rng.choice(BAND_MARKERS[band]))
                else:
                    other = rng.choice(BANDS)
                    words.append(rng.choice(BAND_MARKERS[other]))
            words += rng.choices(FILLERS, k=8) + [condition] * rng.randint(1, 3)
            rng.shuffle(words)
            docs.append(Document(doc_id=f"{band}-n{i}", title=f"report on {condition}",
                                 abstract=" ".join(words), gold_loe=parse_label(band),
                                 assigned_loe=parse_label(band)))
    return LabeledDataset(name=name, docs=docs)


def trend_corpus(n_docs: int = 2000, seed: int = 0):
    """Corpus + topics + qrels where relevance correlates with evidence band.

    Band frequencies follow a Medline-like skew, every document is about one
    condition, and topic-matching documents are relevant with a probability
    that rises with evidence strength.
    """
    rng = random.Random(seed)
    bands = list(MEDLINE_LIKE)
    weights = [MEDLINE_LIKE[b] for b in bands]
    docs = []
    grades: dict[str, dict[str, int]] = {c: {} for c in CONDITIONS}
    for i in range(n_docs):
        band = rng.choices(bands, weights=weights, k=1)[0]
        condition = rng.choice(CONDITIONS)
        doc = make_doc(f"d{i:05d}", band, condition, rng)
        docs.append(doc)
        if rng.random() < RELEVANCE_BY_BAND[band]:
            grades[condition][doc.doc_id] = 2 if rng.random() < 0.5 else 1
        elif rng.random() < 0.3:
            grades[condition][doc.doc_id] = 0  # judged irrelevant
    topics = {f"t{j + 1:02d}": condition for j, condition in enumerate(CONDITIONS)}
    qrels = {topic: dict(grades[condition]) for topic, condition in topics.items()}
    return docs, topics, qrels


def write_corpus_jsonl(docs, path, with_labels: bool = True) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            record = {"doc_id": doc.doc_id, "title": doc.title, "abstract": doc.abstract}
            if with_labels and doc.gold_loe is not None:
                record["loe"] = doc.gold_loe.band
            fh.write(json.dumps(record) + "\n")
