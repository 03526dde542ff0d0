"""Console entry point: train models from a dataset file, then serve them.

Configuration mirrors the scorer CLI conventions: an optional YAML or JSON
config file, with flags winning over file values.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import __version__
from .data import load_dataset
from .errors import ServiceError
from .service import CLASSIFIER_FILE, GENERATOR_FILE, create_app
from .training import TrainConfig, train_classifier, train_generator, two_part_training

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 2


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ServiceError(f"no such config file: {path}")
    text = p.read_text(encoding="utf-8")
    data = json.loads(text) if p.suffix.lower() == ".json" else yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ServiceError(f"config file {path} must hold a mapping")
    return data


def _pick(args: argparse.Namespace, file_cfg: dict, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return file_cfg.get(key, default)


def cmd_train(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    config = TrainConfig(
        epochs=int(_pick(args, file_cfg, "epochs", 6)),
        lr=float(_pick(args, file_cfg, "lr", 2e-3)),
        batch_size=int(_pick(args, file_cfg, "batch_size", 32)),
        embedding_dim=int(file_cfg.get("embedding_dim", 48)),
        hidden_dim=int(file_cfg.get("hidden_dim", 96)),
        seed=int(_pick(args, file_cfg, "seed", 0)),
        valid_fraction=float(file_cfg.get("valid_fraction", 0.2)),
        max_len=int(file_cfg.get("max_len", 120)),
        max_vocab=int(file_cfg.get("max_vocab", 4000)),
    )
    samples = load_dataset(args.dataset)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    reports: dict = {"version": __version__}
    reports["classifier"] = train_classifier(samples, config, out_dir / CLASSIFIER_FILE)
    coherent = [s.sentences for s in samples if s.label == "coherent"]
    reports["generator"] = train_generator(coherent, config, out_dir / GENERATOR_FILE)
    if args.two_part:
        reports["two_part"] = two_part_training(samples, config, out_dir / "two_part")
    (out_dir / "training_report.json").write_text(
        json.dumps(reports, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    logger.info(
        "trained classifier %s (valid accuracy %.3f) and generator %s",
        reports["classifier"]["model_id"],
        reports["classifier"]["valid_accuracy"],
        reports["generator"]["model_id"],
    )
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    app = create_app(args.checkpoints, deterministic=not args.non_deterministic)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="model-service",
        description="Train and serve the desk-scale coherence models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train classifier and generator from a dataset file")
    p.add_argument("--dataset", required=True, help="labeled dataset (JSON lines)")
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.add_argument("--config", help="YAML or JSON config file; flags win over it")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--two-part",
        dest="two_part",
        action="store_true",
        help="also train per-half generators so neither half predicts on seen data",
    )
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("serve", help="serve trained checkpoints over HTTP")
    p.add_argument("--checkpoints", required=True, help="directory holding the .pt files")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8050)
    p.add_argument(
        "--non-deterministic",
        dest="non_deterministic",
        action="store_true",
        help="allow sampling; by default seeds are fixed and decoding is greedy",
    )
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ServiceError as exc:
        logger.error("%s", exc)
        return EXIT_ERROR
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
