"""The `hub` command-line interface.

Subcommands mirror the library modules: ingest, train, triage, annotate,
loop, eval, search, stats, run, serve. File formats are the ones documented
in the README (JSONL corpus lines, TSV label/mention files, JSON configs).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import stats as stats_mod
from .entities import Lexicon, annotate_record
from .errors import LitHubError, StageFailure
from .evaluate import compare_collections, iaa_exact, macro_prf, prf, split
from .logistic import Hyper
from .loop import load_seed_labels
from .pipeline import HubConfig, load_current_snapshot, open_loop, run_daily, save_loop
from .search import parse_query
from .store import CorpusStore, parse_record
from .topics import (
    DEFAULT_TOPICS,
    MultiLabelModel,
    annotate_topics,
    parse_label_file,
    train_topics,
)
from .triage import DEFAULT_KEYWORDS, LinearModel, train_triage, triage


def _read_corpus(path: str) -> list:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(parse_record(line))
    return records


def _config_from_args(args) -> HubConfig:
    if getattr(args, "config", None):
        return HubConfig.from_file(args.config)
    data_dir = getattr(args, "data_dir", None) or os.environ.get("HUB_DATA_DIR", "data")
    return HubConfig.for_data_dir(data_dir)


def _hyper_from_args(args) -> Hyper:
    return Hyper(learning_rate=args.lr, epochs=args.epochs, l2=args.l2)


# -- command handlers ---------------------------------------------------------


def cmd_ingest(args) -> int:
    config = _config_from_args(args)
    store = CorpusStore(config.data_dir / "store")
    lines = Path(args.path).read_text(encoding="utf-8").splitlines()
    report = store.ingest_batch(lines, dry_run=args.dry_run)
    prefix = "[dry-run] " if args.dry_run else ""
    print(prefix + report.summary())
    for line_no, reason in report.rejects:
        print(f"reject line {line_no}: {reason}")
    return 0


def cmd_train_triage(args) -> int:
    labeled = []
    with open(args.data, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = parse_record(line)
            labeled.append((record, bool(json.loads(line).get("relevant"))))
    model = train_triage(
        labeled, hyper=_hyper_from_args(args), threshold=args.threshold, min_df=args.min_df
    )
    model.save(args.out)
    print(f"trained triage model on {len(labeled)} records -> {args.out}")
    return 0


def cmd_train_topics(args) -> int:
    labels = parse_label_file(args.data)
    records = {r.pmid: r for r in _read_corpus(args.corpus)}
    labeled = [(records[p], labels[p]) for p in sorted(labels) if p in records]
    topics = tuple(args.topics.split(",")) if args.topics else DEFAULT_TOPICS
    model = train_topics(
        labeled, topics=topics, hyper=_hyper_from_args(args), min_df=args.min_df
    )
    model.save(args.out)
    print(f"trained {len(topics)}-topic model on {len(labeled)} records -> {args.out}")
    return 0


def cmd_triage(args) -> int:
    model = LinearModel.load(args.model)
    keywords = tuple(args.keywords.split(",")) if args.keywords else DEFAULT_KEYWORDS
    with open(args.out, "w", encoding="utf-8") as out:
        for record in _read_corpus(args.infile):
            d = triage(record, model, keywords)
            category = d.exclusion_category if d.exclusion_category is not None else ""
            out.write(f"{d.pmid}\t{int(d.relevant)}\t{d.score:.6f}\t{category}\n")
    print(f"wrote decisions -> {args.out}")
    return 0


def cmd_annotate_topics(args) -> int:
    model = MultiLabelModel.load(args.model)
    with open(args.out, "w", encoding="utf-8") as out:
        for record in _read_corpus(args.infile):
            ann = annotate_topics(record, model)
            names = model.topics if args.all_scores else sorted(ann.assigned)
            for topic in names:
                out.write(f"{ann.pmid}\t{topic}\t{ann.scores[topic]:.6f}\n")
    print(f"wrote topic annotations -> {args.out}")
    return 0


def cmd_annotate_entities(args) -> int:
    lexicon = Lexicon.load(args.lexicon)
    n = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for record in _read_corpus(args.infile):
            for m in annotate_record(record, lexicon):
                out.write(
                    f"{m.pmid}\t{m.field}\t{m.start}\t{m.end}\t{m.surface}\t"
                    f"{m.entity_type}\t{m.concept_id}\n"
                )
                n += 1
    print(f"wrote {n} mentions -> {args.out}")
    return 0


def _open_cli_loop(args):
    config = _config_from_args(args)
    snapshot = load_current_snapshot(config.data_dir)
    if snapshot is None:
        print("no snapshot published yet; run `hub run` first", file=sys.stderr)
        return None, None
    return config, open_loop(config, snapshot.records.values())


def cmd_loop_signals(args) -> int:
    _, loop = _open_cli_loop(args)
    if loop is None:
        return 1
    print("pmid\ts1\ts2\ts3\ts4\ts5\ts6\ts7\ts8\tp\tpriority\tstatus")
    for item in sorted(loop.items.values(), key=lambda it: it.pmid):
        s = item.signals
        cells = [str(item.pmid)] + [f"{getattr(s, f's{i}'):.4f}" for i in range(1, 9)]
        cells += [f"{item.p:.4f}", f"{item.priority:.4f}", item.status]
        print("\t".join(cells))
    return 0


def cmd_loop_queue(args) -> int:
    _, loop = _open_cli_loop(args)
    if loop is None:
        return 1
    for item in loop.next_review_batch(args.k):
        record = loop.records[item.pmid]
        print(f"{item.pmid}\t{item.priority:.4f}\t{item.p:.4f}\t{record.title[:80]}")
    return 0


def cmd_loop_decide(args) -> int:
    config, loop = _open_cli_loop(args)
    if loop is None:
        return 1
    item = loop.record_decision(args.pmid, args.label, args.curator)
    save_loop(config, loop)
    print(f"{item.pmid} {item.status} by {item.decided_by}")
    return 0


def cmd_loop_iterate(args) -> int:
    config, loop = _open_cli_loop(args)
    if loop is None:
        return 1
    loop.run_iteration()
    save_loop(config, loop)
    print(f"iteration {loop.iteration} complete; {len(loop.pending())} items pending")
    return 0


def _read_item_rows(path: str) -> set:
    rows = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.strip():
                rows.add(tuple(line.split("\t")))
    return rows


def cmd_eval_prf(args) -> int:
    gold, pred = _read_item_rows(args.gold), _read_item_rows(args.pred)
    if args.macro:
        args.by_type = True  # macro averaging is over per-type metrics
    if args.by_type:
        types = sorted({r[5] for r in gold | pred if len(r) > 5})
        parts = []
        for t in types:
            part = prf({r for r in gold if r[5] == t}, {r for r in pred if r[5] == t})
            parts.append(part)
            print(
                f"{t}\tP={part.precision:.4f}\tR={part.recall:.4f}\tF1={part.f1:.4f}"
                f"\t(tp={part.tp} fp={part.fp} fn={part.fn})"
            )
        overall = macro_prf(parts) if args.macro else prf(gold, pred)
    else:
        overall = prf(gold, pred)
    label = "macro" if args.macro else "micro"
    print(
        json.dumps(
            {
                "average": label,
                "precision": round(overall.precision, 6),
                "recall": round(overall.recall, 6),
                "f1": round(overall.f1, 6),
                "tp": overall.tp,
                "fp": overall.fp,
                "fn": overall.fn,
            }
        )
    )
    return 0


def cmd_eval_iaa(args) -> int:
    result = iaa_exact(_read_item_rows(args.a), _read_item_rows(args.b))
    print(
        json.dumps(
            {
                "matches": result.matches,
                "union": result.union,
                "ratio_union": round(result.ratio_union, 6),
                "ratio_a": round(result.ratio_a, 6),
                "ratio_b": round(result.ratio_b, 6),
            }
        )
    )
    return 0


def cmd_eval_split(args) -> int:
    ids = list(range(1, args.n + 1))
    train, test = split(ids, args.train, args.n - args.train, args.seed)
    print(json.dumps({"train": len(train), "test": len(test), "seed": args.seed}))
    if args.out:
        Path(args.out).write_text(
            "\n".join(["# train"] + [str(i) for i in train] + ["# test"] + [str(i) for i in test])
        )
    return 0


def _read_ids(path: str) -> set[int]:
    return {
        int(line)
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    }


def cmd_eval_coverage(args) -> int:
    report = compare_collections(_read_ids(args.a), _read_ids(args.b))
    print(
        json.dumps(
            {
                "size_a": report.size_a,
                "size_b": report.size_b,
                "intersection": report.intersection,
                "b_covered_by_a": round(report.b_covered_by_a, 6),
                "a_covered_by_b": round(report.a_covered_by_b, 6),
            }
        )
    )
    return 0


def cmd_search(args) -> int:
    config = _config_from_args(args)
    snapshot = load_current_snapshot(config.data_dir)
    if snapshot is None:
        print("no snapshot published yet; run `hub run` first", file=sys.stderr)
        return 1
    sort = "relevance" if args.sort == "relevance" else "date_desc"
    query = parse_query(args.query, page=args.page, page_size=args.size, sort=sort)
    result = snapshot.build_index().search(query)
    print(f"total={result.total} page={args.page} size={args.size}")
    for hit in result.hits:
        record = snapshot.records[hit.pmid]
        flag = " [provisional Long COVID]" if hit.provisional_longcovid else ""
        print(f"{hit.pmid}\t{hit.score:.4f}\t{hit.pub_date}\t{record.title[:80]}{flag}")
    return 0


def cmd_stats(args) -> int:
    config = _config_from_args(args)
    snapshot = load_current_snapshot(config.data_dir)
    if snapshot is None:
        print("no snapshot published yet; run `hub run` first", file=sys.stderr)
        return 1
    if args.stat == "overview":
        print(json.dumps(snapshot.stats.get("overview", {})))
    elif args.stat == "growth":
        series = stats_mod.growth(snapshot.records.values(), args.granularity)
        if args.csv:
            sys.stdout.write(stats_mod.growth_csv(series))
        else:
            for row in series.rows:
                print(f"{row.period}\t{row.new}\t{row.cumulative}")
    elif args.stat == "cooccurrence":
        matrix = stats_mod.cooccurrence(
            [a.topics for a in snapshot.annotations().values()]
        )
        print("\t" + "\t".join(matrix.topics))
        for topic, row in zip(matrix.topics, matrix.matrix):
            print(topic + "\t" + "\t".join(str(int(c)) for c in row))
    elif args.stat == "trending":
        if not (config.trending and config.trending.exists()):
            print("no trending file configured")
            return 0
        external = stats_mod.load_trending(config.trending)
        for pmid, score in stats_mod.trending(snapshot.records.keys(), external):
            print(f"{pmid}\t{score}\t{snapshot.records[pmid].title[:80]}")
    return 0


def cmd_run(args) -> int:
    config = _config_from_args(args)
    try:
        run = run_daily(args.delta, config)
    except StageFailure as exc:
        print(f"run failed in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return 1
    for stage in run.stages:
        print(
            f"{stage.name}: in={stage.n_in} out={stage.n_out} "
            f"errors={stage.n_err} ({stage.seconds:.2f}s)"
        )
    print(f"status={run.status} snapshot={run.snapshot_id or 'unchanged'}")
    return 0 if run.status == "succeeded" else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _config_from_args(args)
    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return 0


# -- parser -------------------------------------------------------------------


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--min-df", type=int, default=1)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="hub config JSON")
    p.add_argument("--data-dir", help="data directory (or HUB_DATA_DIR)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hub", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest a corpus delta file into the store")
    p.add_argument("path")
    p.add_argument("--dry-run", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ingest)

    train = sub.add_parser("train", help="train a model").add_subparsers(
        dest="target", required=True
    )
    p = train.add_parser("triage")
    p.add_argument("--data", required=True, help="JSONL records with a 'relevant' key")
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_train_triage)
    p = train.add_parser("topics")
    p.add_argument("--data", required=True, help="pmid<TAB>comma-separated topics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--topics", help="comma-separated topic names (default scheme)")
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_train_topics)

    p = sub.add_parser("triage", help="triage a corpus file with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keywords", help="comma-separated keyword override")
    p.set_defaults(func=cmd_triage)

    annotate = sub.add_parser("annotate", help="annotate a corpus file").add_subparsers(
        dest="target", required=True
    )
    p = annotate.add_parser("topics")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--all-scores", action="store_true")
    p.set_defaults(func=cmd_annotate_topics)
    p = annotate.add_parser("entities")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_annotate_entities)

    loop = sub.add_parser("loop", help="review-loop operations").add_subparsers(
        dest="op", required=True
    )
    p = loop.add_parser("signals")
    _add_config_flags(p)
    p.set_defaults(func=cmd_loop_signals)
    p = loop.add_parser("queue")
    p.add_argument("-k", type=int, default=10)
    _add_config_flags(p)
    p.set_defaults(func=cmd_loop_queue)
    p = loop.add_parser("decide")
    p.add_argument("pmid", type=int)
    p.add_argument("label", choices=["accept", "reject"])
    p.add_argument("--curator", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_loop_decide)
    p = loop.add_parser("iterate")
    _add_config_flags(p)
    p.set_defaults(func=cmd_loop_iterate)

    ev = sub.add_parser("eval", help="evaluation utilities").add_subparsers(
        dest="op", required=True
    )
    p = ev.add_parser("prf")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--by-type", action="store_true")
    p.add_argument("--macro", action="store_true")
    p.set_defaults(func=cmd_eval_prf)
    p = ev.add_parser("iaa")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_eval_iaa)
    p = ev.add_parser("split")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--train", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_split)
    p = ev.add_parser("coverage")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_eval_coverage)

    p = sub.add_parser("search", help="query the current snapshot")
    p.add_argument("query")
    p.add_argument("--page", type=int, default=1)
    p.add_argument("--size", type=int, default=10)
    p.add_argument("--sort", choices=["relevance", "date"], default="date")
    _add_config_flags(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("stats", help="collection statistics")
    p.add_argument("stat", choices=["overview", "growth", "cooccurrence", "trending"])
    p.add_argument("--granularity", choices=["day", "month", "quarter"], default="month")
    p.add_argument("--csv", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", help="run the daily pipeline on a delta file")
    p.add_argument("--delta", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    _add_config_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LitHubError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
