"""Command-line entry point for the embedding exporter."""

from __future__ import annotations

import argparse
import sys

from hegel.errors import DataError

from .export import DEFAULT_MODEL, ExportError, ExportJob, export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="export-embeddings",
        description="encode each document's sentences and write per-document "
                    ".emb interchange files")
    parser.add_argument("--input", required=True, help="corpus JSONL path")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="sentence-transformers model name")
    parser.add_argument("--batch", type=int, default=32,
                        help="encoder batch size")
    parser.add_argument("--limit", type=int, default=None,
                        help="stop after N accepted documents")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(input_path=args.input, out_dir=args.out,
                        model_name=args.model, batch_size=args.batch,
                        limit=args.limit)
        manifest = export_embeddings(job)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(manifest['documents'])} embedding files to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
