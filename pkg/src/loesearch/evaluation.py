"""TREC-style evaluation: qrels/run IO, rank metrics, significance, experiments."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import CorpusError
from .index import FilterBand, Index, search
from .labels import BANDS

VALID_GRADES = (0, 1, 2)
METRICS = ("ndcg", "p10", "rprec", "inf_ndcg")
METRIC_TITLES = {"ndcg": "NDCG@{k}", "p10": "P@10", "rprec": "R-Prec",
                 "inf_ndcg": "infNDCG-approx"}


@dataclass
class Qrels:
    grades: dict[str, dict[str, int]]  # topic → doc → grade

    def grade(self, topic: str, doc_id: str) -> int:
        return self.grades.get(topic, {}).get(doc_id, 0)

    def relevant_count(self, topic: str) -> int:
        return sum(1 for g in self.grades.get(topic, {}).values() if g >= 1)

    def topics(self) -> list[str]:
        return list(self.grades)


@dataclass
class Run:
    tag: str
    topics: dict[str, list[tuple[str, float]]]  # topic → (doc_id, score) ranked


def load_qrels(path) -> Qrels:
    """Parse 'topic 0 docid grade' lines; grades restricted to 0/1/2."""
    grades: dict[str, dict[str, int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 4:
                raise CorpusError(f"line {lineno}: expected 4 fields, got {len(fields)}", lineno)
            topic, _, doc_id, grade_text = fields
            try:
                grade = int(grade_text)
            except ValueError:
                raise CorpusError(f"line {lineno}: grade {grade_text!r} is not an integer",
                                  lineno) from None
            if grade not in VALID_GRADES:
                raise CorpusError(f"line {lineno}: grade {grade} outside {{0,1,2}}", lineno)
            bucket = grades.setdefault(topic, {})
            if doc_id in bucket:
                raise CorpusError(f"line {lineno}: duplicate qrels entry for topic {topic}, "
                                  f"doc {doc_id}", lineno)
            bucket[doc_id] = grade
    return Qrels(grades)


def load_topics(path) -> dict[str, str]:
    """JSONL of {topic_id, query} records → ordered topic_id → query map."""
    topics: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: {exc}", lineno) from None
            topic_id = record.get("topic_id")
            query = record.get("query")
            if topic_id is None or not isinstance(query, str) or not query.strip():
                raise CorpusError(f"line {lineno}: record needs topic_id and a non-empty query",
                                  lineno)
            topic_id = str(topic_id)
            if topic_id in topics:
                raise CorpusError(f"line {lineno}: duplicate topic_id {topic_id}", lineno)
            topics[topic_id] = query
    return topics


def load_run(path) -> Run:
    """Parse 'topic Q0 docid rank score tag' lines.

    Rank or score inconsistencies trigger a warning and a stable re-sort by
    descending score; duplicate documents within a topic are an error.
    """
    topics: dict[str, list[tuple[str, float]]] = {}
    ranks: dict[str, list[int]] = {}
    tag = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 6:
                raise CorpusError(f"line {lineno}: expected 6 fields, got {len(fields)}", lineno)
            topic, _, doc_id, rank_text, score_text, line_tag = fields
            try:
                rank = int(rank_text)
                score = float(score_text)
            except ValueError:
                raise CorpusError(f"line {lineno}: bad rank or score", lineno) from None
            if not math.isfinite(score):
                raise CorpusError(f"line {lineno}: non-finite score", lineno)
            if tag is None:
                tag = line_tag
            if any(doc_id == d for d, _ in topics.get(topic, [])):
                raise CorpusError(f"line {lineno}: duplicate doc {doc_id} in topic {topic}",
                                  lineno)
            topics.setdefault(topic, []).append((doc_id, score))
            ranks.setdefault(topic, []).append(rank)
    for topic, entries in topics.items():
        scores = [s for _, s in entries]
        rank_ok = ranks[topic] == list(range(1, len(entries) + 1))
        score_ok = all(scores[i] >= scores[i + 1] for i in range(len(scores) - 1))
        if not (rank_ok and score_ok):
            warnings.warn(f"topic {topic}: rank/score inconsistency; re-sorting by score")
            entries.sort(key=lambda pair: -pair[1])
    return Run(tag or "run", topics)


def write_run(run: Run, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for topic, entries in run.topics.items():
            for rank, (doc_id, score) in enumerate(entries, start=1):
                fh.write(f"{topic} Q0 {doc_id} {rank} {score!r} {run.tag}\n")


def _dcg(grades: Sequence[float], k: int, log_base: float) -> float:
    total = 0.0
    for j, grade in enumerate(grades[:k], start=1):
        total += grade / max(1.0, math.log(j, log_base))
    return total


def ndcg_at_k(run_grades: Sequence[int], qrels_grades: Sequence[int], k: int = 10,
              log_base: float = 2.0) -> float | None:
    """Ranks 1 and 2 are undiscounted; None when the topic has no relevant docs."""
    if k < 1:
        raise ValueError("k must be at least 1")
    ideal = sorted(qrels_grades, reverse=True)
    if not ideal or ideal[0] <= 0:
        return None
    return _dcg(list(run_grades), k, log_base) / _dcg(ideal, k, log_base)


def p_at_10(run_docs: Sequence[str], topic_qrels: dict[str, int]) -> float:
    hits = sum(1 for doc in run_docs[:10] if topic_qrels.get(doc, 0) >= 1)
    return hits / 10.0


def r_prec(run_docs: Sequence[str], topic_qrels: dict[str, int]) -> float | None:
    r = sum(1 for grade in topic_qrels.values() if grade >= 1)
    if r == 0:
        return None
    hits = sum(1 for doc in run_docs[:r] if topic_qrels.get(doc, 0) >= 1)
    return hits / r


def condensed_ndcg_at_k(run_docs: Sequence[str], topic_qrels: dict[str, int],
                        k: int = 10) -> float | None:
    """Judged-only NDCG: unjudged docs are dropped from the ranking first."""
    judged = [doc for doc in run_docs if doc in topic_qrels]
    grades = [topic_qrels[doc] for doc in judged]
    return ndcg_at_k(grades, list(topic_qrels.values()), k)


def topic_metrics(run_docs: Sequence[str], topic_qrels: dict[str, int],
                  k: int = 10) -> dict[str, float | None]:
    grades = [topic_qrels.get(doc, 0) for doc in run_docs]
    return {
        "ndcg": ndcg_at_k(grades, list(topic_qrels.values()), k),
        "p10": p_at_10(run_docs, topic_qrels),
        "rprec": r_prec(run_docs, topic_qrels),
        "inf_ndcg": condensed_ndcg_at_k(run_docs, topic_qrels, k),
    }


def confusion_matrix(preds: Sequence[int], truths: Sequence[int]) -> np.ndarray:
    """7x7 counts; rows are true ordinals, columns predicted ordinals."""
    if len(preds) != len(truths) or not preds:
        raise ValueError("preds and truths must be equal-length and non-empty")
    cm = np.zeros((len(BANDS), len(BANDS)), dtype=np.int64)
    for pred, true in zip(preds, truths):
        cm[true, pred] += 1
    return cm


def macro_f1(cm: np.ndarray) -> float:
    """Unweighted mean F1 over classes present in truths or predictions."""
    scores = []
    for c in range(cm.shape[0]):
        tp = cm[c, c]
        truth_total = cm[c, :].sum()
        pred_total = cm[:, c].sum()
        if truth_total == 0 and pred_total == 0:
            continue
        precision = tp / pred_total if pred_total else 0.0
        recall = tp / truth_total if truth_total else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        scores.append(f1)
    return float(np.mean(scores))


def rmse(preds: Sequence[int], truths: Sequence[int]) -> float:
    if len(preds) != len(truths) or not preds:
        raise ValueError("preds and truths must be equal-length and non-empty")
    diffs = np.asarray(preds, dtype=np.float64) - np.asarray(truths, dtype=np.float64)
    return float(np.sqrt(np.mean(np.square(diffs))))


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz continued fraction for the incomplete beta
    max_iter, eps, fpmin = 300, 3e-16, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_p_value(t: float, df: int) -> float:
    """Two-sided p for Student's t with df degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> tuple[float, float, int]:
    """(t, two-sided p, df); zero-variance differences get the degenerate result."""
    if len(a) != len(b):
        raise ValueError("paired samples must be equal length")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test needs at least 2 pairs")
    diffs = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0, df
        return math.copysign(math.inf, mean), 0.0, df
    t = mean / (sd / math.sqrt(n))
    return t, student_t_p_value(t, df), df


def bonferroni(alpha: float, m: int) -> float:
    if m < 1:
        raise ValueError("m must be at least 1")
    return alpha / m


@dataclass
class BandResult:
    band: FilterBand
    size_fraction: float
    means: dict[str, float | None]
    deltas: dict[str, float | None]
    per_topic: dict[str, dict[str, float | None]]
    significance: dict[str, tuple[float, float] | None] = field(default_factory=dict)


@dataclass
class ExperimentReport:
    k: int
    n_topics: int
    alpha: float
    rows: list[BandResult]


def _mean_or_none(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def run_experiment(index: Index, topics: dict[str, str], qrels: Qrels,
                   bands: Sequence[FilterBand], k: int = 10,
                   alpha: float = 0.05) -> ExperimentReport:
    """Band-filtered retrieval comparison with deltas and t-tests against All.

    Per topic the retrieval depth is max(k, R) so R-Prec sees enough of the
    ranking; the All band is always evaluated since deltas are against it.
    """
    ordered_bands = list(bands)
    if FilterBand.ALL not in ordered_bands:
        ordered_bands.insert(0, FilterBand.ALL)
    scored_topics = []
    for topic_id in topics:
        if topic_id not in qrels.grades:
            warnings.warn(f"topic {topic_id} has no qrels entries; excluded")
            continue
        scored_topics.append(topic_id)
    per_band: dict[FilterBand, dict[str, dict[str, float | None]]] = {}
    for band in ordered_bands:
        per_topic = {}
        for topic_id in scored_topics:
            topic_qrels = qrels.grades[topic_id]
            depth = max(k, qrels.relevant_count(topic_id))
            hits = search(index, topics[topic_id], band, depth)
            per_topic[topic_id] = topic_metrics([h.doc_id for h in hits], topic_qrels, k)
        per_band[band] = per_topic
    means = {
        band: {
            metric: _mean_or_none(
                [scores[metric] for scores in per_band[band].values()
                 if scores[metric] is not None]
            )
            for metric in METRICS
        }
        for band in ordered_bands
    }
    n_comparisons = sum(1 for band in ordered_bands if band is not FilterBand.ALL) * len(METRICS)
    corrected = bonferroni(alpha, n_comparisons) if n_comparisons else alpha
    rows = []
    for band in ordered_bands:
        admitted = sum(1 for label in index.labels if band.admits(label))
        deltas = {}
        significance: dict[str, tuple[float, float] | None] = {}
        for metric in METRICS:
            mean_band = means[band][metric]
            mean_all = means[FilterBand.ALL][metric]
            deltas[metric] = (mean_band - mean_all
                              if mean_band is not None and mean_all is not None else None)
            if band is FilterBand.ALL:
                significance[metric] = None
                continue
            paired = [
                (per_band[band][t][metric], per_band[FilterBand.ALL][t][metric])
                for t in scored_topics
                if per_band[band][t][metric] is not None
                and per_band[FilterBand.ALL][t][metric] is not None
            ]
            if len(paired) >= 2:
                t_stat, p_value, _ = paired_t_test([x for x, _ in paired],
                                                   [y for _, y in paired])
                significance[metric] = (t_stat, p_value)
            else:
                significance[metric] = None
        rows.append(BandResult(
            band=band,
            size_fraction=admitted / index.n_docs,
            means=means[band],
            deltas=deltas,
            per_topic=per_band[band],
            significance=significance,
        ))
    return ExperimentReport(k=k, n_topics=len(scored_topics), alpha=corrected, rows=rows)


def _fmt(value: float | None, plus: bool = False) -> str:
    if value is None:
        return "-"
    return f"{value:+.4f}" if plus else f"{value:.4f}"


def format_report_text(report: ExperimentReport) -> str:
    titles = [METRIC_TITLES[m].format(k=report.k) for m in METRICS]
    header = ["band", "size"]
    for title in titles:
        header += [title, "delta"]
    rows = [header]
    for row in report.rows:
        cells = [row.band.value, f"{100 * row.size_fraction:.1f}%"]
        for metric in METRICS:
            star = ""
            sig = row.significance.get(metric)
            if sig is not None and sig[1] < report.alpha:
                star = "*"
            cells += [_fmt(row.means[metric]), _fmt(row.deltas[metric], plus=True) + star]
        rows.append(cells)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip()
             for r in rows]
    lines.append(f"topics: {report.n_topics}; * = p < {report.alpha:g} "
                 "(paired t vs all, Bonferroni-corrected)")
    return "\n".join(lines) + "\n"


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "k": report.k,
        "n_topics": report.n_topics,
        "alpha": report.alpha,
        "bands": [
            {
                "band": row.band.value,
                "size_fraction": row.size_fraction,
                "means": row.means,
                "deltas": row.deltas,
                "significance": {
                    metric: ({"t": sig[0], "p": sig[1]} if sig else None)
                    for metric, sig in row.significance.items()
                },
                "per_topic": row.per_topic,
            }
            for row in report.rows
        ],
    }


def format_report_json(report: ExperimentReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def format_report_csv(report: ExperimentReport) -> str:
    """Per-topic scores, one row per (band, topic)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["band", "topic"] + list(METRICS))
    for row in report.rows:
        for topic_id in sorted(row.per_topic):
            scores = row.per_topic[topic_id]
            writer.writerow([row.band.value, topic_id]
                            + ["" if scores[m] is None else repr(scores[m]) for m in METRICS])
    return buffer.getvalue()
