"""Command line interface: export corpora as embedding matrices."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ExportError
from .export import DATASETS, SPLITS, ExportSpec, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedding-exporter",
        description="Export benchmark corpora as DSE1 embedding matrices")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="download, encode, and write one corpus split")
    p.add_argument("--dataset", required=True, choices=DATASETS)
    p.add_argument("--split", required=True, choices=SPLITS)
    p.add_argument("--encoder", required=True,
                   choices=["sentence-encoder", "averaged-word-vectors"])
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cache", default=None, help="download cache directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = ExportSpec(dataset=args.dataset, split=args.split,
                          encoder=args.encoder, out_dir=args.out)
        cache = Path(args.cache) if args.cache else None
        metadata = export(spec, cache_dir=cache)
        print(f"exported {metadata['n_rows']} rows x {metadata['dim']} dims "
              f"({metadata['num_classes']} classes) -> {spec.matrix_path}")
    except (ExportError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
