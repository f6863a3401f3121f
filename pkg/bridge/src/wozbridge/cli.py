"""Command line: train either model kind, then serve checkpoints."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import BridgeError
from .service import ServiceConfig, create_app
from .training import TrainingConfig, train_collector, train_labeler


def _training_config(args) -> TrainingConfig:
    kwargs = {}
    for field in ("learning_rate", "warmup_steps", "batch_size", "epochs",
                  "emb_dim", "hidden_dim", "seed"):
        value = getattr(args, field)
        if value is not None:
            kwargs[field] = value
    return TrainingConfig(**kwargs)


def _add_training_args(p) -> None:
    p.add_argument("--data", required=True, help="JSONL training file")
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--warmup-steps", type=int, dest="warmup_steps")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--epochs", type=int)
    p.add_argument("--emb-dim", type=int, dest="emb_dim")
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.add_argument("--seed", type=int)


def cmd_train_collector(args) -> int:
    summary = train_collector(args.data, args.out, _training_config(args))
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_train_labeler(args) -> int:
    summary = train_labeler(args.data, args.out, _training_config(args))
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    config = ServiceConfig(
        collector_checkpoint=args.collector,
        labeler_checkpoint=args.labeler,
        host=args.host,
        port=args.port,
        device=args.device,
        deterministic=args.deterministic,
    )
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wozbridge",
        description="Train and serve the dialogue generation/scoring models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-collector", help="fit the generation model")
    _add_training_args(p)
    p.set_defaults(func=cmd_train_collector)

    p = sub.add_parser("train-labeler", help="fit the option scorer")
    _add_training_args(p)
    p.set_defaults(func=cmd_train_labeler)

    p = sub.add_parser("serve", help="expose /generate and /score")
    p.add_argument("--collector", help="generation checkpoint")
    p.add_argument("--labeler", help="scoring checkpoint")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--device", default="cpu", help="torch device for inference")
    p.add_argument("--deterministic", action="store_true",
                   help="greedy decoding for reproducible integration tests")
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
