"""Service operations CLI: run the gateway, ingest decks and questions."""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_config
from .errors import PartialIngestError, SlideFeedbackError
from .service import FeedbackService


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slidefeedback")
    parser.add_argument("--config", help="path to the JSON config file")
    sub = parser.add_subparsers(dest="verb", required=True)

    serve = sub.add_parser("serve", help="run the HTTP gateway")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8080)

    deck = sub.add_parser("ingest-deck", help="ingest a deck directory or zip")
    deck.add_argument("source", help="deck directory or zip archive")
    deck.add_argument("--deck-id", default=None)

    question = sub.add_parser("ingest-question", help="ingest question JSON files")
    question.add_argument("files", nargs="+", help="question definition JSON files")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    try:
        service = FeedbackService(config)
        if args.verb == "serve":
            import uvicorn

            from .gateway import create_app

            uvicorn.run(create_app(service), host=args.host, port=args.port)
            return 0
        if args.verb == "ingest-deck":
            try:
                deck = service.ingest_deck_source(args.source, args.deck_id)
            except PartialIngestError as exc:
                print(f"partial ingest: {exc}", file=sys.stderr)
                return 3
            print(json.dumps(deck.to_json(), indent=2))
            return 0
        for path in args.files:
            with open(path, encoding="utf-8") as handle:
                question = service.ingest_question_def(json.load(handle))
            print(f"ingested {question.question_id} ({question.kind.value})")
        return 0
    except (SlideFeedbackError, OSError) as exc:
        print(f"slidefeedback {args.verb}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
