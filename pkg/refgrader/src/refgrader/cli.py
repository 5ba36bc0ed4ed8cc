"""refgrader CLI: init-bundle, make-data, finetune, serve."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .bundle import build_tiny_bundle, load_bundle
from .data import make_synthetic_dataset, write_csv
from .finetune import FinetuneConfig, finetune
from .server import serve


def cmd_init_bundle(args) -> int:
    path = build_tiny_bundle(args.out, seed=args.seed)
    print(f"wrote tiny bundle to {path}")
    return 0


def cmd_make_data(args) -> int:
    dataset = make_synthetic_dataset(args.rows, seed=args.seed)
    write_csv(dataset, args.out)
    print(f"wrote {len(dataset)} labeled rows to {args.out}")
    return 0


def cmd_finetune(args) -> int:
    bundle = load_bundle(args.model)
    config = FinetuneConfig.from_file(args.config) if args.config else FinetuneConfig()
    metrics = finetune(bundle, args.data, config, args.out)
    print(
        f"selected epoch {metrics['selected_epoch']} "
        f"(val loss {metrics['val_loss']:.4f}); "
        f"test QWK {metrics['test_qwk']:.4f}, AUC {metrics['test_auc_ovr']}"
    )
    print(f"bundle + metrics.json written to {args.out}")
    return 0


def cmd_serve(args) -> int:
    bundle = load_bundle(args.model)
    try:
        serve(bundle, args.port, args.host)
    except OSError as exc:
        print(f"error: cannot bind port {args.port}: {exc}", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refgrader",
        description="Transformer reference grader behind the grading wire protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-bundle", help="create the tiny default model bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_init_bundle)

    p = sub.add_parser("make-data", help="write a synthetic labeled CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--rows", type=int, default=120)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_data)

    p = sub.add_parser("finetune", help="fine-tune a bundle on a text,label CSV")
    p.add_argument("--model", required=True, help="input bundle directory")
    p.add_argument("--data", required=True, help="CSV with header text,label")
    p.add_argument("--config", help="JSON with learning_rate/epochs/batch_size/seed")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("serve", help="serve a bundle over POST /v1/grade")
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, default=8100)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("REFGRADER_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
