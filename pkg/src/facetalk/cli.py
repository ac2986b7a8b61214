"""Command line entry points: parse, gen, eval, serve, repl."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .clu import ClarificationNeeded, ParseContext, parse_utterance
from .corpusgen import (
    expand_all,
    instantiate,
    load_grammar,
    read_corpus,
    round_trip_eval,
    write_corpus,
)
from .relatedness import load_lexicon
from .schema import load_schema
from .session import load_manager


def _add_data_args(parser, catalog=False):
    parser.add_argument("--schema", required=True, help="schema JSON file")
    parser.add_argument("--lexicon", required=True, help="lexicon JSON file")
    if catalog:
        parser.add_argument("--catalog", required=True, help="catalog JSON file")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="facetalk", description="conversational faceted search"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_parse = sub.add_parser("parse", help="parse one utterance to intents")
    _add_data_args(p_parse)
    p_parse.add_argument("--category", help="active category id")
    p_parse.add_argument("--context", help="ParseContext as JSON", default=None)
    p_parse.add_argument("utterance")

    p_gen = sub.add_parser("gen", help="generate a labeled corpus")
    p_gen.add_argument("--grammar", required=True)
    p_gen.add_argument("--schema", required=True)
    p_gen.add_argument("-n", type=int, default=1000)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("-o", "--output", default="-")

    p_eval = sub.add_parser("eval", help="round-trip a corpus through the parser")
    p_eval.add_argument("--corpus", required=True)
    _add_data_args(p_eval)

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    _add_data_args(p_serve, catalog=True)
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--page-size", type=int, default=10)
    p_serve.add_argument("--seed", type=int, default=None)
    p_serve.add_argument("--ui-dir", default=None, help="static UI bundle directory")
    p_serve.add_argument("--snapshot-dir", default=None,
                         help="file-backed session snapshots")

    p_repl = sub.add_parser("repl", help="interactive terminal loop")
    _add_data_args(p_repl, catalog=True)
    p_repl.add_argument("--page-size", type=int, default=5)
    p_repl.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)
    return {
        "parse": _cmd_parse,
        "gen": _cmd_gen,
        "eval": _cmd_eval,
        "serve": _cmd_serve,
        "repl": _cmd_repl,
    }[args.command](args)


def _cmd_parse(args) -> int:
    schema = load_schema(Path(args.schema).read_bytes())
    lexicon = load_lexicon(Path(args.lexicon).read_bytes())
    if args.context:
        raw = json.loads(args.context)
        context = ParseContext(
            active_category=raw.get("active_category") or args.category,
            last_touched_facet=raw.get("last_touched_facet"),
            pending_prompt=raw.get("pending_prompt"),
        )
    else:
        context = ParseContext(active_category=args.category)
    try:
        result = parse_utterance(args.utterance, schema, lexicon, context)
    except ClarificationNeeded as need:
        print(json.dumps({"clarification": need.message}))
        return 1
    print(json.dumps(result.to_json()))
    return 0


def _cmd_gen(args) -> int:
    grammar = load_grammar(Path(args.grammar).read_bytes())
    schema = load_schema(Path(args.schema).read_bytes())
    templates = expand_all(grammar)
    items = instantiate(templates, schema, args.n, args.seed,
                        span_values=grammar.span_values)
    if args.output == "-":
        write_corpus(items, sys.stdout)
    else:
        with open(args.output, "w", encoding="utf-8") as fp:
            write_corpus(items, fp)
    return 0


def _cmd_eval(args) -> int:
    schema = load_schema(Path(args.schema).read_bytes())
    lexicon = load_lexicon(Path(args.lexicon).read_bytes())
    corpus = read_corpus(Path(args.corpus).read_text(encoding="utf-8"))

    def parse(text: str, category_id: str):
        context = ParseContext(active_category=category_id)
        return parse_utterance(text, schema, lexicon, context).intents

    report = round_trip_eval(corpus, parse)
    print(json.dumps(report.to_json()))
    return 0 if report.exact_match == report.total else 1


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app
    from .session import FileSnapshotStore

    store = FileSnapshotStore(args.snapshot_dir) if args.snapshot_dir else None
    manager = load_manager(
        args.schema, args.lexicon, args.catalog,
        page_size=args.page_size, seed=args.seed, store=store,
    )
    app = create_app(manager, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_repl(args) -> int:
    manager = load_manager(
        args.schema, args.lexicon, args.catalog,
        page_size=args.page_size, seed=args.seed,
    )
    session_id = manager.create_session()
    print("facetalk repl; empty line or ctrl-d to quit")
    while True:
        try:
            line = input("you> ").strip()
        except EOFError:
            print()
            break
        if not line:
            break
        response = manager.handle_utterance(session_id, line)
        print(f"state> {response.state_summary}")
        if response.events:
            print("event> " + ", ".join(e.value for e in response.events))
        for product in response.products:
            price = product.numeric_values.get("price")
            price_text = f"  ${float(price):.2f}" if price is not None else ""
            print(f"  - {product.title}{price_text}")
        if not response.products:
            print("  (no matching products)")
        if response.prompt:
            print(f"bot> {response.prompt}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
