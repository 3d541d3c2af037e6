"""Command-line driver: train, classify, vote, index, search, eval, explain, serve."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .classifier import (LoEPipeline, Prediction, _parse_prediction,
                         import_external_predictions, majority_vote, prediction_label,
                         train_pipeline)
from .corpus import CorpusError, load_corpus, load_labeled, stratified_split
from .evaluation import (confusion_matrix, format_report_csv, format_report_json,
                         format_report_text, load_qrels, load_topics, macro_f1, rmse,
                         run_experiment)
from .explain import aggregate_term_scores, explain
from .index import BM25Params, FilterBand, build_index, load_index, save_index, search
from .labels import BANDS, LabelError, parse_label
from .service import ServiceConfig, app_from_config
from .textproc import tokenize


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        raise UsageError(message)


def _band_arg(text: str) -> str:
    try:
        FilterBand.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def _bands_arg(text: str) -> str:
    names = [b for b in text.split(",") if b.strip()]
    if not names:
        raise argparse.ArgumentTypeError("must name at least one band")
    for name in names:
        _band_arg(name)
    return text


def _write_out(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _distribution_lines(counts: dict[str, int]) -> str:
    total = sum(counts.values())
    lines = ["band  count  fraction"]
    for band in BANDS:
        n = counts.get(band, 0)
        lines.append(f"{band:<4}  {n:>5}  {n / total:.4f}")
    return "\n".join(lines) + "\n"


def _cmd_train(args) -> int:
    dataset = load_labeled(args.corpus, name="corpus")
    train, valid, test = stratified_split(dataset, seed=args.seed)
    pipeline = train_pipeline(train, select_k=args.select, trees=args.trees,
                              max_depth=args.max_depth, seed=args.seed)
    if args.out:
        pipeline.save(args.out)
    preds = [pipeline.predict_text(doc.doc_id, doc.text) for doc in test.docs]
    pred_ordinals = [p.chosen.ordinal for p in preds]
    true_ordinals = [doc.gold_loe.ordinal for doc in test.docs]
    cm = confusion_matrix(pred_ordinals, true_ordinals)
    metrics = {
        "macro_f1": macro_f1(cm),
        "rmse": rmse(pred_ordinals, true_ordinals),
        "accuracy": float(np.trace(cm) / cm.sum()),
    }
    splits = {"train": len(train.docs), "valid": len(valid.docs), "test": len(test.docs)}
    if args.format == "json":
        payload = {"splits": splits, "metrics": metrics, "confusion": cm.tolist()}
        _write_out(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out_report)
        return 0
    if args.format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for name in sorted(metrics):
            writer.writerow([name, repr(metrics[name])])
        _write_out(buffer.getvalue(), args.out_report)
        return 0
    lines = ["split  docs"]
    for name in ("train", "valid", "test"):
        lines.append(f"{name:<5}  {splits[name]}")
    lines.append("")
    lines.append("metric    value")
    lines.append(f"macro-f1  {metrics['macro_f1']:.4f}")
    lines.append(f"rmse      {metrics['rmse']:.4f}")
    lines.append(f"accuracy  {metrics['accuracy']:.4f}")
    lines.append("")
    lines.append("confusion (rows = true, cols = predicted)")
    lines.append("      " + "  ".join(f"{b:>4}" for b in BANDS))
    for i, band in enumerate(BANDS):
        lines.append(f"{band:>4}  " + "  ".join(f"{cm[i, j]:>4}" for j in range(len(BANDS))))
    _write_out("\n".join(lines) + "\n", args.out_report)
    return 0


def _prediction_record(p: Prediction) -> dict:
    return {"doc_id": p.doc_id, "confidences": p.confidences,
            "chosen": p.chosen.band, "source": p.source}


def _cmd_classify(args) -> int:
    docs = load_corpus(args.corpus)
    pipeline = LoEPipeline.load(args.model)
    records = []
    counts: dict[str, int] = {}
    for doc in docs:
        prediction = pipeline.predict_text(doc.doc_id, doc.text)
        records.append(_prediction_record(prediction))
        band = prediction.chosen.band
        counts[band] = counts.get(band, 0) + 1
    payload = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    summary = _distribution_lines(counts)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(payload)
        sys.stderr.write(summary)
    return 0


def _load_vote_files(paths) -> dict[str, list[tuple]]:
    by_doc: dict[str, list[tuple]] = {}
    for path in paths:
        for p in import_external_predictions(path):
            by_doc.setdefault(p.doc_id, []).append(prediction_label(p))
    return by_doc


def _cmd_vote(args) -> int:
    if len(args.predictions) < 2:
        raise UsageError("vote needs at least 2 --predictions files")
    by_doc = _load_vote_files(args.predictions)
    lines = []
    counts: dict[str, int] = {}
    for doc_id in by_doc:
        votes = by_doc[doc_id]
        label = majority_vote(votes)
        tallies: dict[str, int] = {}
        for vote_label, _ in votes:
            tallies[vote_label.band] = tallies.get(vote_label.band, 0) + 1
        lines.append(json.dumps({"doc_id": doc_id, "loe": label.band,
                                 "votes": {b: tallies[b] for b in sorted(tallies)}},
                                sort_keys=True) + "\n")
        counts[label.band] = counts.get(label.band, 0) + 1
    payload = "".join(lines)
    summary = _distribution_lines(counts)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(payload)
        sys.stderr.write(summary)
    return 0


def _load_assignments(paths) -> dict[str, list[tuple]]:
    """doc_id → votes, accepting prediction JSONL or {doc_id, loe} assignment JSONL."""
    by_doc: dict[str, list[tuple]] = {}
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"line {lineno}: {exc}", lineno) from None
                if "loe" in record and "confidences" not in record and "raw" not in record:
                    doc_id = record.get("doc_id")
                    if not isinstance(doc_id, str) or not doc_id:
                        raise CorpusError(f"line {lineno}: missing or empty doc_id", lineno)
                    try:
                        label = parse_label(record["loe"])
                    except LabelError as exc:
                        raise CorpusError(f"line {lineno}: {exc}", lineno) from None
                    by_doc.setdefault(doc_id, []).append((label, 0.0))
                    continue
                try:
                    p = _parse_prediction(record)
                except (ValueError, LabelError, TypeError, KeyError) as exc:
                    raise CorpusError(f"line {lineno}: {exc}", lineno) from None
                by_doc.setdefault(p.doc_id, []).append(prediction_label(p))
    return by_doc


def _cmd_index(args) -> int:
    docs = load_corpus(args.corpus)
    assignments = _load_assignments(args.predictions) if args.predictions else {}
    for doc in docs:
        votes = assignments.get(doc.doc_id)
        if votes:
            doc.assigned_loe = majority_vote(votes)
        elif doc.gold_loe is not None:
            doc.assigned_loe = doc.gold_loe
        else:
            raise CorpusError(f"document {doc.doc_id} has no LoE assignment "
                              "(no prediction and no corpus loe field)")
    index = build_index(docs, BM25Params(k1=args.k1, b=args.b))
    save_index(index, args.out)
    sys.stdout.write(f"indexed {index.n_docs} documents, "
                     f"{len(index.postings)} terms -> {args.out}\n")
    return 0


def _cmd_search(args) -> int:
    index = load_index(args.index)
    band = FilterBand.parse(args.band)
    hits = search(index, args.query, band, args.k)
    if args.format == "json":
        payload = [
            {"doc_id": h.doc_id, "title": h.title, "snippet": h.snippet,
             "score": h.score, "loe": h.label.band}
            for h in hits
        ]
        _write_out(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
        return 0
    if args.format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["rank", "doc_id", "score", "loe", "title"])
        for rank, h in enumerate(hits, start=1):
            writer.writerow([rank, h.doc_id, repr(h.score), h.label.band, h.title or ""])
        _write_out(buffer.getvalue(), args.out)
        return 0
    if not hits:
        _write_out("no results\n", args.out)
        return 0
    lines = ["rank  loe  score    doc_id  title"]
    for rank, h in enumerate(hits, start=1):
        title = h.title or ""
        lines.append(f"{rank:>4}  {h.label.band:<3}  {h.score:.4f}  {h.doc_id}  {title}")
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_eval(args) -> int:
    index = load_index(args.index)
    topics = load_topics(args.topics)
    qrels = load_qrels(args.qrels)
    bands = [FilterBand.parse(b) for b in args.bands.split(",") if b.strip()]
    if not bands:
        raise UsageError("--bands must name at least one band")
    report = run_experiment(index, topics, qrels, bands, k=args.k)
    if args.format == "json":
        _write_out(format_report_json(report), args.out)
    elif args.format == "csv":
        _write_out(format_report_csv(report), args.out)
    else:
        _write_out(format_report_text(report), args.out)
    return 0


def _cmd_explain(args) -> int:
    docs = load_corpus(args.corpus)
    pipeline = LoEPipeline.load(args.model)
    explanations = []
    for i, doc in enumerate(docs):
        terms = tokenize(doc.text)
        if not terms:
            continue
        explanations.append(explain(pipeline.confidence_fn, doc.doc_id, terms,
                                    n_samples=args.samples, seed=args.seed + i))
    if not explanations:
        raise CorpusError("no documents with indexable terms")
    table = aggregate_term_scores(explanations, top_k=args.top)
    if args.format == "json":
        payload = {band: [[term, score] for term, score in pairs]
                   for band, pairs in table.items()}
        _write_out(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
        return 0
    if args.format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["band", "rank", "term", "score"])
        for band in BANDS:
            for rank, (term, score) in enumerate(table[band], start=1):
                writer.writerow([band, rank, term, repr(score)])
        _write_out(buffer.getvalue(), args.out)
        return 0
    lines = []
    for band in BANDS:
        lines.append(f"{band}:")
        for term, score in table[band]:
            lines.append(f"  {score:>8.4f}  {term}")
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    config = ServiceConfig(
        index_path=args.index,
        model_path=args.model,
        host=args.host,
        port=args.port,
        default_band=args.band,
        max_k=args.max_k,
        cors_origins=args.cors or [],
    )
    app = app_from_config(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="loesearch",
                     description="Evidence-aware literature search and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit the baseline classifier on a labeled corpus")
    p.add_argument("--corpus", required=True, help="labeled JSONL corpus")
    p.add_argument("--out", help="model output path (JSON)")
    p.add_argument("--out-report", help="metrics output path (default stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=200)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--select", type=int, default=2000, help="chi2-selected feature count")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", help="tag a corpus with a trained model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="predictions JSONL path (default stdout)")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("vote", help="merge prediction files by majority vote")
    p.add_argument("--predictions", action="append", default=[], required=True)
    p.add_argument("--out", help="assignments JSONL path (default stdout)")
    p.set_defaults(func=_cmd_vote)

    p = sub.add_parser("index", help="build a search index from a tagged corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--predictions", action="append", default=[],
                   help="LoE assignments (prediction or vote JSONL); "
                        "falls back to the corpus loe field")
    p.add_argument("--out", required=True, help="index output path")
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("search", help="run one query against an index")
    p.add_argument("query")
    p.add_argument("--index", required=True)
    p.add_argument("--band", type=_band_arg, default="all")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("eval", help="band-filtered retrieval experiment")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True, help="JSONL of {topic_id, query}")
    p.add_argument("--qrels", required=True)
    p.add_argument("--bands", type=_bands_arg, default="all,loe3,loe2,loe1")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("explain", help="aggregate per-band term influence over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--index", required=True)
    p.add_argument("--model")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--band", type=_band_arg, default="all", help="default search band")
    p.add_argument("--max-k", type=int, default=100)
    p.add_argument("--cors", action="append", help="allowed CORS origin (repeatable)")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except (CorpusError, LabelError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
