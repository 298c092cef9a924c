"""Exporter command line.

    cembexport export --kind {image|caption|concept} --encoder <spec>
                      --input <manifest> [--templates <file>] [--lang <code>]
                      [--batch-size N] --out <path>
    cembexport export-pivot --input <captions.jsonl> --out <pivot.jsonl>

Exit codes: 0 success, 1 usage error, 2 data/encoder error.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ExporterError
from .export import ExportJob, export_embeddings, export_pivot_map


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="cembexport", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="encode a manifest into a .cemb file")
    p.add_argument("--kind", required=True, choices=["image", "caption", "concept"])
    p.add_argument("--encoder", required=True,
                   help="stub:<dim>, recorded:<path>, or a transformers model name")
    p.add_argument("--input", required=True)
    p.add_argument("--templates", default=None, help="concept template table JSON")
    p.add_argument("--lang", default="en")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--out", required=True)

    p = sub.add_parser("export-pivot", help="validate and emit a pivot map")
    p.add_argument("--input", required=True, help="multilingual caption corpus JSONL")
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "export":
            job = ExportJob(
                kind=args.kind,
                encoder=args.encoder,
                input_path=args.input,
                out_path=args.out,
                batch_size=args.batch_size,
                lang=args.lang,
                templates_path=args.templates,
            )
            count, dim = export_embeddings(job)
            print(f"exported {count} rows, dim={dim}")
        else:
            n_ids, n_langs = export_pivot_map(args.input, args.out)
            print(f"exported pivot map: {n_ids} caption ids x {n_langs} languages")
        return 0
    except ExporterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
