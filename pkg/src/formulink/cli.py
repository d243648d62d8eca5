"""Command-line entry points.

Subcommands: ingest, chat, sweep, compare, serve. Exit codes: 0 success,
1 recorded failure outcome, 2 usage error (argparse's default).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, knowledge, orchestrator, ppo, simworld
from .errors import EmbedderOversize, FormulinkError
from .gateway import ModelProfile


def _corpus_docs(args) -> tuple[list, list]:
    """(documents, fact specs) from --corpus or the generated evaluation corpus."""
    if getattr(args, "corpus", None):
        docs = knowledge.load_corpus(args.corpus)
        _, facts = simworld.generate_corpus(args.corpus_seed)
        return docs, facts
    doc, facts = simworld.generate_corpus(args.corpus_seed)
    return [doc], facts


def _cmd_ingest(args) -> int:
    try:
        docs = knowledge.load_corpus(args.corpus_dir)
    except FormulinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        index = knowledge.build_index(docs, args.chunk_size)
    except EmbedderOversize as exc:
        print(f"ingest failed: {exc}", file=sys.stderr)
        return 1
    except FormulinkError as exc:
        print(f"ingest failed: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else Path(args.corpus_dir) / f"index_chunk{args.chunk_size}.json"
    knowledge.save_index(index, out)
    print(f"indexed {len(docs)} documents into {len(index.chunks)} chunks -> {out}")
    return 0


def _cmd_chat(args) -> int:
    docs, facts = _corpus_docs(args)
    vocab = simworld.query_vocabulary(facts)
    try:
        index = knowledge.build_index(docs, args.chunk_size)
    except EmbedderOversize as exc:
        print(f"ingest failed: {exc}", file=sys.stderr)
        return 1
    profile = ModelProfile(name=args.profile, backend=args.backend)
    state = orchestrator.start_session(profile, index, args.k,
                                       vocabulary=vocab, world=facts)
    print(f"session {state.session_id} started (chunk_size={args.chunk_size}, k={args.k})")
    print(f"[{state.stage}] designer turn (ctrl-D to stop):")
    for line in sys.stdin:
        message = line.strip()
        if not message:
            continue
        reply, state, entry = orchestrator.advance(state, message)
        for item in entry["retrieved"]:
            print(f"  retrieved {item['doc']}#{item['chunk']} score={item['score']:.4f}")
        print(f"  prompt tokens: {entry['prompt_tokens']}")
        print(f"agent> {reply}")
        if state.terminal:
            break
        print(f"[{state.stage}] designer turn:")
    if state.stage == orchestrator.STAGE_DONE:
        print(f"session DONE in {state.round} rounds")
        return 0
    print(f"session {state.stage}"
          + (f" ({state.failure_reason})" if state.failure_reason else ""))
    return 1 if state.stage == orchestrator.STAGE_FAILED else 0


def _cmd_sweep(args) -> int:
    table = harness.run_sweep(args.seed)
    written = harness.write_outputs(table, args.out)
    print(f"sweep complete: {len(table.rows)} settings -> {written['json']}")
    for row in table.rows:
        print(f"  chunk={row.chunk_size:<5} k={row.k:<3} {row.outcome:<18} rounds={row.rounds}")
    return 0


def _parse_seed_range(text: str) -> tuple[int, ...]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(s) for s in text.split(","))


def _cmd_compare(args) -> int:
    seeds = _parse_seed_range(args.seeds)
    config = None
    if args.iterations is not None:
        config = ppo.TrainConfig(iterations=args.iterations)
    try:
        report = harness.run_comparison(seeds=seeds, config=config)
    except FormulinkError as exc:
        print(f"comparison failed: {exc}", file=sys.stderr)
        return 1
    written = harness.write_outputs(report, args.out)
    print(f"comparison complete -> {written['json']}")
    for arm in ("real", "iai", "manual"):
        print(f"  {arm:<7} median={report.medians[arm]: .4f}")
    for name, ok in report.ordering.items():
        print(f"  {name}: {'ok' if ok else 'VIOLATED'}")
    return 0


def _cmd_serve(args) -> int:
    from .service import ServiceConfig, serve
    config = ServiceConfig.load(args.config)
    serve(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formulink",
        description="Retrieval-assisted problem formulation with a solver-backed evaluation stack.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a knowledge index from a corpus directory")
    p.add_argument("corpus_dir")
    p.add_argument("--chunk-size", type=int, required=True, dest="chunk_size")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("chat", help="interactive designer dialogue in the terminal")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--backend", default="scripted", choices=["scripted", "remote_http"])
    p.add_argument("--chunk-size", type=int, default=2000, dest="chunk_size")
    p.add_argument("--corpus", default=None, help="corpus directory (default: generated corpus)")
    p.add_argument("--corpus-seed", type=int, default=harness.DEFAULT_CORPUS_SEED,
                   dest="corpus_seed")
    p.set_defaults(fn=_cmd_chat)

    p = sub.add_parser("sweep", help="run the chunk-size/k interaction sweep")
    p.add_argument("--seed", type=int, default=harness.DEFAULT_CORPUS_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("compare", help="run the three-arm formulation comparison")
    p.add_argument("--seeds", default="1..5", help="range A..B or comma list")
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=None,
                   help="override training iterations (smoke runs)")
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", default=None)
    p.set_defaults(fn=_cmd_serve)
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
