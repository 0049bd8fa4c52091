"""Command-line entry points: `lmexport tokens` and `lmexport embeddings`.

Exit codes: 0 success, 1 usage error, 2 runtime error (model load failure,
bad input file).
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from . import __version__
from .embeddings import export_embeddings
from .tokens import export_token_scores


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_layers(spec: str) -> list[int | None]:
    layers: list[int | None] = []
    for part in spec.split(","):
        part = part.strip()
        if part in ("final", "null", ""):
            layers.append(None)
        else:
            layers.append(int(part))
    return layers or [None]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lmexport", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lmexport {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("tokens", help="per-token logit statistics (token_scores.jsonl)")
    p.add_argument("--model", required=True, help="model name or local path")
    p.add_argument("--in", dest="infile", required=True, help="samples.jsonl")
    p.add_argument("--out", required=True, help="token_scores.jsonl")
    p.add_argument("--topk", type=int, default=64)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--device", default="cpu")
    p.set_defaults(command="tokens")

    p = sub.add_parser("embeddings", help="mean-pooled embeddings (embeddings.jsonl)")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--layers", default="final", help='"final" or comma-separated indices')
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--device", default="cpu")
    p.set_defaults(command="embeddings")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "tokens":
            stats = export_token_scores(
                args.model, args.infile, args.out,
                topk=args.topk, batch_size=args.batch_size, device=args.device,
            )
        else:
            stats = export_embeddings(
                args.model, args.infile, args.out,
                layers=_parse_layers(args.layers),
                batch_size=args.batch_size, device=args.device,
            )
    except Exception as exc:  # model load, IO, bad data: nonzero exit
        print(f"lmexport {args.command}: error: {exc}", file=sys.stderr)
        return 2
    logging.getLogger(__name__).info("done: %s", stats)
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
