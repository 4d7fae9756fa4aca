"""Command-line entry point for anchor file generation."""

from __future__ import annotations

import argparse
import sys

from anchorgen.emit import make_anchors


def build_parser():
    parser = argparse.ArgumentParser(prog="anchorgen")
    parser.add_argument("--dataset", required=True, help="benchmark CSV path")
    parser.add_argument("--meta", required=True, help="dataset metadata JSON")
    parser.add_argument("--out", required=True, help="anchor file to write")
    parser.add_argument("--provider", choices=("offline", "http"),
                        default="offline")
    parser.add_argument("--endpoint", default=None,
                        help="embedding service URL (http provider)")
    parser.add_argument("--dim", type=int, default=384)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        path = make_anchors(args.dataset, args.meta, args.out,
                            provider=args.provider, endpoint=args.endpoint,
                            dim=args.dim)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
