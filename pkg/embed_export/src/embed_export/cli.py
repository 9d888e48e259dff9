"""Command-line wrapper: flags mirror ExportConfig."""

from __future__ import annotations

import argparse
import sys

from .exporter import DEFAULT_MODEL, ExportConfig, ExportError, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Export sentence-mean synopsis embeddings to an embedding CSV.",
    )
    parser.add_argument("--anime", required=True, help="anime CSV with MAL_ID and sypnopsis columns")
    parser.add_argument("--out", required=True, help="output embedding CSV path")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help=f"sentence-embedding model name (default {DEFAULT_MODEL})")
    parser.add_argument("--normalize", action="store_true",
                        help="L2-normalize each pooled embedding")
    parser.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ExportConfig(anime_csv=args.anime, output=args.out, model_name=args.model,
                          normalize=args.normalize, batch_size=args.batch_size)
    try:
        return export_embeddings(config)
    except ExportError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
