"""Command-line entry point: ``superarc <subcommand>``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import ctm
from .corpus import (
    by_class,
    generate_class_corpus,
    generate_random_binary,
    load_corpus_file,
    load_embedded_corpus,
    write_corpus_file,
)
from .harness import (
    RunConfig,
    emit_report,
    prediction_rows,
    ranking_csv,
    read_records,
    run_benchmark,
    score_models,
    select_items,
    table_for,
)
from .metrics import BdmConfig
from .scoring import FRACTIONS

log = logging.getLogger("superarc")


def _table(spec: str) -> ctm.CtmTable:
    return ctm.load_table(int(spec)) if spec.isdigit() else ctm.read_table(spec)


def cmd_build_ctm(args) -> int:
    table = ctm.enumerate_machines(
        args.n,
        step_budget=args.budget,
        retain_programs=args.programs is not None,
        workers=args.workers,
        allow_n4=args.n == 4,
    )
    ctm.write_table(table, args.out, args.programs)
    log.info(
        "n=%d budget=%d machines=%d halting=%d strings=%d max_steps=%d",
        table.n, table.step_budget, table.machines_examined, table.total_halting, len(table), table.max_observed_steps,
    )
    return 0


def cmd_gen_corpus(args) -> int:
    if args.kind == "embedded":
        items = load_embedded_corpus()
        if args.classes:
            items = [it for k in args.classes for it in by_class(items, k)]
        if args.distinct:
            items = [it for it in items if it.duplicate_of is None]
    elif args.kind == "random-binary":
        items = generate_random_binary(args.length, args.count, args.seed)
    else:
        cfg = BdmConfig(_table(args.ctm_table))
        items = generate_class_corpus(args.count, args.seed, cfg, args.length)
    write_corpus_file(items, args.out)
    log.info("wrote %d items to %s", len(items), args.out)
    return 0


def cmd_evaluate(args) -> int:
    config = RunConfig.load(args.config)
    result = run_benchmark(config)
    log.info("%d records, bundle in %s", len(result.records), result.bundle)
    sys.stdout.write(ranking_csv(result.scorecards))
    return 0


def cmd_score(args) -> int:
    records = read_records(args.records)
    cards = score_models(records, args.alpha, args.epsilon)
    text = json.dumps([c.to_json() for c in cards], indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(ranking_csv(cards))
    return 0


def cmd_predict(args) -> int:
    items = load_corpus_file(args.corpus) if args.corpus else load_embedded_corpus()
    items = [it for it in items if it.alphabet == "binary" and it.duplicate_of is None]
    if args.classes:
        items = [it for it in items if it.complexity_class in args.classes]
    cfg = BdmConfig(_table(args.ctm_table), args.block_size)
    rows = prediction_rows(items, cfg, tuple(args.fractions))
    fields = list(rows[0]) if rows else []
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write(",".join(fields) + "\n")
        for r in rows:
            out.write(",".join(f"{r[f]:.6f}" if isinstance(r[f], float) else str(r[f]) for f in fields) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_report(args) -> int:
    records = read_records(args.records)
    config = RunConfig.load(args.config) if args.config else None
    cards = score_models(records, config.alpha if config else 1.0, config.epsilon if config else 0.01)
    items = select_items(config) if config else None
    predictions = None
    if config is not None and config.metric == "bdm":
        cfg = BdmConfig(table_for(config), config.block_size or None)
        predictions = prediction_rows(items, cfg) or None
    out = emit_report(records, cards, args.out, items=items, config=config, predictions=predictions)
    log.info("report written to %s", out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="superarc", description="Complexity-based sequence benchmark tools.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-ctm", help="enumerate (n,2) machines and write a CTM table")
    p.add_argument("n", type=int, choices=(1, 2, 3, 4))
    p.add_argument("out")
    p.add_argument("--budget", type=int, default=None, help="step budget (default: busy-beaver bound)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--programs", default=None, help="also write the per-string program sidecar")
    p.set_defaults(func=cmd_build_ctm)

    p = sub.add_parser("gen-corpus", help="write a corpus JSON file")
    p.add_argument("kind", choices=("embedded", "random-binary", "classes"))
    p.add_argument("out")
    p.add_argument("--classes", nargs="*", default=None)
    p.add_argument("--distinct", action="store_true", help="drop duplicated embedded rows")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--length", type=int, default=11)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ctm-table", default="3", help="shipped table n or a table path")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("evaluate", help="run a benchmark config and write its report bundle")
    p.add_argument("config")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="ScoreCards and ranking from a records.jsonl file")
    p.add_argument("records")
    p.add_argument("--out", default=None, help="ScoreCard JSON path")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("predict", help="BDM next-bit baseline on binary items")
    p.add_argument("--corpus", default=None, help="corpus JSON (default: embedded)")
    p.add_argument("--classes", nargs="*", default=None)
    p.add_argument("--fractions", type=float, nargs="*", default=list(FRACTIONS))
    p.add_argument("--ctm-table", default="4")
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="rebuild a report bundle from records.jsonl")
    p.add_argument("records")
    p.add_argument("out")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
