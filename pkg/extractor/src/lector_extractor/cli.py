"""Command line entry: export a deck's tensor bundle from a checkpoint."""

from __future__ import annotations

import argparse
import logging
import sys

from .export import ExtractionConfig, export_bundle


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="lector-extract",
        description="export word embeddings and word-level attention to a tensor bundle",
    )
    parser.add_argument("--deck", required=True, help="<deck_id>.slides.jsonl file")
    parser.add_argument("--checkpoint", required=True,
                        help="pretrained masked-LM checkpoint (path or model id)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--max-seq-len", type=int, default=512)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)

    config = ExtractionConfig(
        checkpoint=args.checkpoint,
        max_seq_len=args.max_seq_len,
        device=args.device,
    )
    try:
        bin_path, manifest_path = export_bundle(args.deck, config, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {bin_path} and {manifest_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
