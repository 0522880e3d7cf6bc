"""Command-line interface mirroring the HTTP API.

    tabot ingest   --csv data.csv --out data.schema.json
    tabot enrich   --schema data.schema.json --commands edits.json --out v2.json
    tabot generate --csv data.csv --schema data.schema.json --strategy auto --out data.bot
    tabot eval     --csv data.csv --bundle data.bot --cases cases.txt
    tabot repl     --csv data.csv --bundle data.bot
    tabot serve    --storage ./storage --port 8080

``repl`` gives a terminal chat loop against a bundle without the HTTP
layer; ``eval`` emits one line-delimited JSON match report per case for
regression diffing.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import TabotConfig
from .dialogue import DialogueManager, Session
from .fallback import HttpFallbackClient
from .generator import bundle_to_json, generate, load_bundle
from .ingest import load_csv
from .matching import EmptyUtterance, IntentMatcher
from .patterns import catalog
from .schema import (apply_enrichments, build_default_schema,
                     command_from_dict, load_schema, schema_to_json)


def _read_json(path: str) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_config(args: argparse.Namespace) -> TabotConfig:
    return TabotConfig.load(getattr(args, "config", None))


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if args.categorical_threshold is not None:
        config = config.with_overrides(categorical_threshold=args.categorical_threshold)
    table = load_csv(Path(args.csv), config=config)
    schema = build_default_schema(table, config)
    _write_text(args.out, schema_to_json(schema))
    print(f"{table.row_count} rows, {len(table.columns)} columns", file=sys.stderr)
    for fd in schema.fields:
        flag = " categorical" if fd.stats.is_categorical else ""
        print(f"  {fd.canonical_name}: {fd.field_type.value}, "
              f"{fd.stats.diversity} distinct{flag}", file=sys.stderr)
    return 0


def cmd_enrich(args: argparse.Namespace) -> int:
    schema = load_schema(_read_json(args.schema))
    commands_doc = _read_json(args.commands)
    commands = [command_from_dict(doc)
                for doc in commands_doc.get("commands", commands_doc)]
    schema = apply_enrichments(schema, commands)
    _write_text(args.out, schema_to_json(schema))
    print(f"applied {len(commands)} command(s)", file=sys.stderr)
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    table = load_csv(Path(args.csv), config=config)
    if args.schema:
        schema = load_schema(_read_json(args.schema))
    else:
        schema = build_default_schema(table, config)
    strategy = None if args.strategy == "auto" else args.strategy
    bundle = generate(schema, catalog(), config, strategy)
    _write_text(args.out, bundle_to_json(bundle))
    print(f"strategy={bundle.strategy} intents={len(bundle.intents)} "
          f"entities={len(bundle.entities)}", file=sys.stderr)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    bundle = load_bundle(_read_json(args.bundle))
    matcher = IntentMatcher(bundle)
    lines = []
    for raw_line in Path(args.cases).read_text(encoding="utf-8").splitlines():
        utterance = raw_line.strip()
        if not utterance or utterance.startswith("#"):
            continue
        try:
            result = matcher.match(utterance)
            report = {
                "utterance": utterance,
                "intent": result.intent,
                "confidence": result.confidence,
                "accepted": (result.confidence >= matcher.accept_threshold
                             and not result.violations),
                "missing": list(result.missing_required),
                "violations": list(result.violations),
                "slots": {name: str(mention.value)
                          for name, mention in sorted(result.slots.items())},
            }
        except EmptyUtterance:
            report = {"utterance": utterance, "intent": None,
                      "confidence": 0.0, "accepted": False,
                      "missing": [], "violations": ["empty"], "slots": {}}
        lines.append(json.dumps(report, sort_keys=True))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_repl(args: argparse.Namespace) -> int:
    config = _load_config(args)
    bundle = load_bundle(_read_json(args.bundle))
    table = load_csv(Path(args.csv), config=config)
    fallback = None
    if config.fallback_url:
        fallback = HttpFallbackClient(config.fallback_url, config.fallback_timeout_s)
    manager = DialogueManager(bundle, table, config, fallback)
    session = Session(session_id="repl")
    print(f"tabot repl - {len(bundle.intents)} intents "
          f"({bundle.strategy}); /quit to exit")
    while True:
        try:
            text = input("you> ")
        except (EOFError, KeyboardInterrupt):
            print()
            return 0
        if text.strip() in ("/quit", "/exit"):
            return 0
        if not text.strip():
            continue
        answer, session = manager.handle_turn(session, text)
        print(f"bot> {answer.text}")
        if answer.suggested_replies:
            print(f"     [{' | '.join(answer.suggested_replies)}]")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app
    config = _load_config(args)
    config = config.with_overrides(host=args.host or config.host,
                                   port=args.port or config.port)
    frontend = args.frontend or _default_frontend()
    app = create_app(args.storage, config, frontend_dir=frontend)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def _default_frontend() -> str | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend"
    return str(candidate) if (candidate / "index.html").exists() else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tabot",
                                     description="conversational interfaces "
                                                 "over CSV data")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="profile a CSV into a schema document")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", default="-")
    p.add_argument("--config")
    p.add_argument("--categorical-threshold", type=int, default=None)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("enrich", help="apply enrichment commands to a schema")
    p.add_argument("--schema", required=True)
    p.add_argument("--commands", required=True,
                   help="JSON file: {\"commands\": [...]}")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_enrich)

    p = sub.add_parser("generate", help="generate a bot bundle")
    p.add_argument("--csv", required=True)
    p.add_argument("--schema", help="schema document (default: auto-built)")
    p.add_argument("--strategy", choices=["auto", "expanded", "generic"],
                   default="auto")
    p.add_argument("--out", default="-")
    p.add_argument("--config")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("eval", help="match a case file, one report per line")
    p.add_argument("--bundle", required=True)
    p.add_argument("--cases", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("repl", help="terminal chat loop against a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--csv", required=True)
    p.add_argument("--config")
    p.set_defaults(fn=cmd_repl)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--storage", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--config")
    p.add_argument("--frontend", help="directory with the web UI")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
