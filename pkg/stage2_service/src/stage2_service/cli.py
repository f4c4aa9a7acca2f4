"""Command line entry points: serve the scorer over HTTP, or fine-tune one."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Sequence

from .app import DEFAULT_MAX_BATCH, DEFAULT_THRESHOLD, create_app
from .encoder import CheckpointScorer, EncoderConfig
from .finetune import finetune
from .mock_scorer import MockScorer


def _build_scorer(model_source: str):
    if model_source == "mock":
        return MockScorer()
    return CheckpointScorer(model_source)  # refuses to start on a bad path


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    scorer = _build_scorer(args.model)
    app = create_app(scorer, threshold=args.threshold, max_batch=args.max_batch)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_finetune(args: argparse.Namespace) -> int:
    config = EncoderConfig(max_len=args.max_len, dim=args.dim, layers=args.layers,
                           model_id=args.model_id)
    result = finetune(dataset=args.dataset, output=args.output, epochs=args.epochs,
                      seed=args.seed, batch_size=args.batch_size,
                      learning_rate=args.learning_rate, config=config,
                      text_column=args.text_column, label_column=args.label_column,
                      positive_token=args.positive_token,
                      negative_token=args.negative_token)
    print(json.dumps(result, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stage2-service")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the scoring service")
    p.add_argument("--model", default=os.environ.get("STAGE2_MODEL", "mock"),
                   help='"mock" or a checkpoint directory')
    p.add_argument("--host", default=os.environ.get("STAGE2_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("STAGE2_PORT", "8020")))
    p.add_argument("--threshold", type=float,
                   default=float(os.environ.get("STAGE2_THRESHOLD", DEFAULT_THRESHOLD)))
    p.add_argument("--max-batch", type=int,
                   default=int(os.environ.get("STAGE2_MAX_BATCH", DEFAULT_MAX_BATCH)))
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("finetune", help="fine-tune the byte-level encoder on a CSV")
    p.add_argument("--dataset", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--max-len", type=int, default=128)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--model-id", default="byte-encoder-v1")
    p.add_argument("--text-column", default="payload")
    p.add_argument("--label-column", default="label")
    p.add_argument("--positive-token", default="1")
    p.add_argument("--negative-token", default="0")
    p.set_defaults(fn=_cmd_finetune)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
