"""Command-line surface: build datasets, score, rank, and meta-evaluate.

Exit codes are a stable scripting contract: 0 success, 1 partial failure
(some items failed but the run completed), 2 usage or configuration error.
Config may come from a YAML or JSON file via --config; flags win over file
values. Every report file echoes the effective configuration and the tool
version.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import yaml

from . import __version__
from .augment import (
    AugmentationConfig,
    EchoGenerator,
    LOCAL_STRATEGIES,
    build_dataset,
)
from .backends import HeuristicBackend, OracleBackend, ScorerBackend
from .corpus import (
    iter_discourses,
    load_documents,
    read_dataset,
    write_dataset,
)
from .discourse import Discourse, as_discourse
from .errors import (
    BackendError,
    CoherevalError,
    ConfigError,
    InsufficientData,
    IntegrityError,
    InvalidInput,
    ParseError,
)
from .metaeval import (
    dataset_level,
    length_bucket_report,
    load_pair_file,
    load_summeval,
    render_bucket_table,
    render_correlation_table,
    sample_level,
)
from .remote import REMOTE_URL_ENV, RemoteGenerator, RemoteScorerBackend
from .scoring import RANK_TIE, ScoringConfig, pairwise_rank, unified_score

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"no such config file: {path}")
    text = p.read_text(encoding="utf-8")
    try:
        if p.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"could not parse config file {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    return data


def _pick(args: argparse.Namespace, file_cfg: dict, key: str, default):
    """Flag value if given, else config-file value, else the default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in file_cfg:
        return file_cfg[key]
    return default


def _resolve_remote_url(explicit: str | None) -> str:
    url = explicit or os.environ.get(REMOTE_URL_ENV)
    if not url:
        raise ConfigError(
            f"remote backend selected but no URL given; pass --remote-url or set {REMOTE_URL_ENV}"
        )
    return url


def _make_scorer(name: str, remote_url: str | None, oracle_dataset: str | None) -> ScorerBackend:
    if name == "heuristic":
        return HeuristicBackend()
    if name == "oracle":
        if not oracle_dataset:
            raise ConfigError("oracle backend needs --oracle-dataset")
        samples = read_dataset(oracle_dataset)
        return OracleBackend.from_dataset(samples)
    if name == "remote":
        return RemoteScorerBackend(_resolve_remote_url(remote_url))
    raise ConfigError(f"unknown backend {name!r} (choose heuristic, oracle, or remote)")


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return Path(path).open("w", encoding="utf-8", newline="\n"), True


def _dump_line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False)


# --- augment ----------------------------------------------------------------


def cmd_augment(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    seed = int(_pick(args, file_cfg, "seed", 0))
    workers = int(_pick(args, file_cfg, "workers", 1))
    strategy = _pick(args, file_cfg, "strategy", "generative")
    generator_name = _pick(args, file_cfg, "generator", "echo")
    filter_name = _pick(args, file_cfg, "filter_backend", "heuristic")
    config = AugmentationConfig(
        min_sentences=int(_pick(args, file_cfg, "min_sentences", 2)),
        max_sentences=int(_pick(args, file_cfg, "max_sentences", 5)),
        filter_threshold=float(_pick(args, file_cfg, "filter_threshold", 0.5)),
        global_fraction=float(_pick(args, file_cfg, "global_fraction", 0.25)),
        seed=seed,
        ngram_order=int(_pick(args, file_cfg, "ngram_order", 2)),
    )
    sources_path = _pick(args, file_cfg, "sources", None)
    if not sources_path:
        raise ConfigError("augment needs --sources")
    out_dir = Path(_pick(args, file_cfg, "out", "augmented"))

    documents = load_documents(sources_path)
    discourses, skipped = iter_discourses(
        documents, seed, min_n=config.min_sentences, max_n=config.max_sentences
    )
    if skipped:
        logger.warning("%d documents too short to sample: %s", len(skipped), ", ".join(skipped[:5]))

    generator = None
    if strategy == "generative":
        if generator_name == "echo":
            generator = EchoGenerator()
        elif generator_name == "remote":
            generator = RemoteGenerator(
                _resolve_remote_url(args.remote_url),
                max_new_tokens=int(file_cfg.get("max_new_tokens", 48)),
                temperature=float(file_cfg.get("temperature", 0.0)),
            )
        else:
            raise ConfigError(f"unknown generator {generator_name!r} (choose echo or remote)")
    filter_scorer = None
    if filter_name not in ("none", None):
        filter_scorer = _make_scorer(filter_name, args.remote_url, args.oracle_dataset)

    result = build_dataset(
        config,
        discourses,
        generator=generator,
        filter_scorer=filter_scorer,
        local_strategy=strategy,
        workers=workers,
    )

    out_dir.mkdir(parents=True, exist_ok=True)
    dataset_path = out_dir / "dataset.jsonl"
    write_dataset(result.samples, dataset_path)
    record = result.report.to_record()
    record["sources"] = str(sources_path)
    record["strategy"] = strategy
    record["skipped_documents"] = list(skipped)
    (out_dir / "report.json").write_text(
        json.dumps(record, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    if result.exchanges:
        with (out_dir / "exchanges.jsonl").open("w", encoding="utf-8", newline="\n") as handle:
            for exchange in result.exchanges:
                handle.write(_dump_line(exchange.to_record()) + "\n")
    counts = result.report.counts
    logger.info(
        "wrote %d samples (%d global pairs, %d local pairs) to %s",
        counts["total"],
        counts["n_neg_global"],
        counts["n_local_kept"],
        dataset_path,
    )
    return EXIT_OK


# --- score ------------------------------------------------------------------


def _parse_score_line(raw: str, lineno: int) -> tuple[str, Discourse]:
    try:
        record = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
    if not isinstance(record, dict):
        raise ParseError("expected a JSON object", lineno)
    item_id = str(record.get("id", f"line-{lineno}"))
    if "sentences" in record:
        sentences = record["sentences"]
        if not isinstance(sentences, list) or not all(isinstance(s, str) for s in sentences):
            raise ParseError("'sentences' must be a list of strings", lineno)
        return item_id, as_discourse(sentences, origin_id=item_id)
    if "text" in record and isinstance(record["text"], str):
        from .corpus import segment_sentences

        return item_id, Discourse(tuple(segment_sentences(record["text"])), origin_id=item_id)
    raise ParseError("need 'sentences' or 'text'", lineno)


def cmd_score(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    backend_name = _pick(args, file_cfg, "backend", "heuristic")
    local_weight = float(_pick(args, file_cfg, "local_weight", 0.5))
    scorer = _make_scorer(backend_name, args.remote_url, args.oracle_dataset)
    config = ScoringConfig(local_weight=local_weight)
    in_path = Path(args.in_path)
    if not in_path.is_file():
        raise InvalidInput(f"no such input file: {in_path}")

    out, should_close = _open_out(args.out)
    failures = 0
    total = 0
    try:
        with in_path.open("r", encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                if not raw.strip():
                    continue
                total += 1
                try:
                    item_id, discourse = _parse_score_line(raw, lineno)
                    breakdown = unified_score(discourse, scorer, config)
                except (ParseError, InvalidInput, BackendError, LookupError) as exc:
                    failures += 1
                    out.write(_dump_line({"line": lineno, "error": str(exc)}) + "\n")
                    continue
                out.write(_dump_line({"id": item_id, **breakdown.to_record()}) + "\n")
        summary = {
            "summary": {
                "version": __version__,
                "n_inputs": total,
                "n_failures": failures,
                "backend": scorer.identity,
                "local_weight": local_weight,
            }
        }
        out.write(_dump_line(summary) + "\n")
    finally:
        if should_close:
            out.close()
    if failures:
        logger.warning("%d of %d lines failed", failures, total)
        return EXIT_PARTIAL
    return EXIT_OK


# --- rank -------------------------------------------------------------------


def cmd_rank(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    backend_name = _pick(args, file_cfg, "backend", "heuristic")
    local_weight = float(_pick(args, file_cfg, "local_weight", 0.5))
    scorer = _make_scorer(backend_name, args.remote_url, args.oracle_dataset)
    config = ScoringConfig(local_weight=local_weight)
    pairs = load_pair_file(args.pairs)

    out, should_close = _open_out(args.out)
    failures = 0
    credit = 0.0
    ranked = 0
    try:
        for first, second, gold in pairs:
            pair_name = first.origin_id.rsplit("/", 1)[0]
            try:
                verdict = pairwise_rank(first, second, scorer, config)
                final_a = unified_score(first, scorer, config).final
                final_b = unified_score(second, scorer, config).final
            except (BackendError, LookupError) as exc:
                failures += 1
                out.write(_dump_line({"id": pair_name, "error": str(exc)}) + "\n")
                continue
            ranked += 1
            if verdict == RANK_TIE:
                credit += 0.5
            elif verdict == gold:
                credit += 1.0
            out.write(
                _dump_line(
                    {
                        "id": pair_name,
                        "predicted": verdict,
                        "gold": gold,
                        "final_a": final_a,
                        "final_b": final_b,
                    }
                )
                + "\n"
            )
        summary = {
            "summary": {
                "version": __version__,
                "n_pairs": len(pairs),
                "n_failures": failures,
                "accuracy": (credit / ranked) if ranked else None,
                "backend": scorer.identity,
                "local_weight": local_weight,
            }
        }
        out.write(_dump_line(summary) + "\n")
    finally:
        if should_close:
            out.close()
    return EXIT_PARTIAL if failures else EXIT_OK


# --- meta-eval --------------------------------------------------------------


def _load_score_file(path: str, matrix) -> tuple[tuple[float, ...], ...]:
    p = Path(path)
    if not p.is_file():
        raise InvalidInput(f"no such score file: {path}")
    cells: dict[tuple[str, str], float] = {}
    with p.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            try:
                key = (str(record["doc_id"]), str(record["system_id"]))
                cells[key] = float(record["score"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"need doc_id, system_id, score: {exc}", lineno) from exc
    rows = []
    for doc_id in matrix.document_ids:
        row = []
        for sys_id in matrix.system_ids:
            if (doc_id, sys_id) not in cells:
                raise InvalidInput(f"score file is missing document {doc_id!r} system {sys_id!r}")
            row.append(cells[(doc_id, sys_id)])
        rows.append(tuple(row))
    return tuple(rows)


def cmd_metaeval(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    local_weight = float(_pick(args, file_cfg, "local_weight", 0.5))
    matrix = load_summeval(args.ratings)
    if args.scores:
        scores = _load_score_file(args.scores, matrix)
        backend_identity = f"file:{args.scores}"
    else:
        backend_name = _pick(args, file_cfg, "backend", "heuristic")
        scorer = _make_scorer(backend_name, args.remote_url, args.oracle_dataset)
        scores = matrix.score_all(scorer, ScoringConfig(local_weight=local_weight))
        backend_identity = scorer.identity

    level = args.level
    record: dict = {
        "version": __version__,
        "backend": backend_identity,
        "local_weight": local_weight,
        "n_documents": matrix.n_documents,
        "n_systems": matrix.n_systems,
    }
    tables = []
    if level in ("sample", "both"):
        report = sample_level(matrix, scores)
        record["sample"] = report.to_record()
        tables.append(("sample", report))
    if level in ("dataset", "both"):
        report = dataset_level(matrix, scores)
        record["dataset"] = report.to_record()
        tables.append(("dataset", report))
    if args.buckets:
        buckets = length_bucket_report(matrix, scores)
        record["buckets"] = [b.to_record() for b in buckets]

    print(render_correlation_table(tables))
    if args.buckets:
        print()
        print(render_bucket_table(buckets))
    if args.out:
        Path(args.out).write_text(
            json.dumps(record, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        logger.info("wrote report to %s", args.out)
    return EXIT_OK


# --- dataset-stats ----------------------------------------------------------


def cmd_dataset_stats(args: argparse.Namespace) -> int:
    samples = read_dataset(args.in_path)
    by_label: dict[str, int] = {}
    by_provenance: dict[str, int] = {}
    lengths: dict[int, int] = {}
    pair_ids = set()
    for sample in samples:
        by_label[sample.label] = by_label.get(sample.label, 0) + 1
        by_provenance[sample.provenance] = by_provenance.get(sample.provenance, 0) + 1
        n = len(sample.discourse)
        lengths[n] = lengths.get(n, 0) + 1
        pair_ids.add(sample.pair_id)
    record = {
        "version": __version__,
        "path": str(args.in_path),
        "n_samples": len(samples),
        "n_pairs": len(pair_ids),
        "by_label": dict(sorted(by_label.items())),
        "by_provenance": dict(sorted(by_provenance.items())),
        "sentence_counts": {str(k): lengths[k] for k in sorted(lengths)},
        "pair_integrity": "ok",
    }
    out, should_close = _open_out(args.out)
    try:
        out.write(json.dumps(record, indent=2, ensure_ascii=False) + "\n")
    finally:
        if should_close:
            out.close()
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON config file; flags win over it")
    common.add_argument("--seed", type=int, help="run seed (default 0)")
    common.add_argument(
        "--backend",
        choices=["heuristic", "oracle", "remote"],
        help="scorer backend (default heuristic)",
    )
    common.add_argument(
        "--lambda",
        dest="local_weight",
        type=float,
        help="local-score weight in [0,1] (default 0.5)",
    )
    common.add_argument(
        "--delta",
        dest="filter_threshold",
        type=float,
        help="coherence filter threshold in [0,1] (default 0.5)",
    )
    common.add_argument("--workers", type=int, help="max concurrent backend calls (default 1)")
    common.add_argument("--out", help="output file or directory (default command-specific)")
    common.add_argument(
        "--remote-url",
        help=f"base URL for the remote backend (fallback: ${REMOTE_URL_ENV})",
    )
    common.add_argument(
        "--oracle-dataset", help="dataset file backing the oracle scorer's label table"
    )

    parser = argparse.ArgumentParser(
        prog="cohereval",
        description="Build coherence datasets, score discourses, and meta-evaluate scorers.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", parents=[common], help="build a labeled coherence dataset")
    p.add_argument("--sources", help="directory of .txt files or a JSONL document file")
    p.add_argument(
        "--strategy",
        choices=list(LOCAL_STRATEGIES),
        help="local negative strategy (default generative)",
    )
    p.add_argument(
        "--generator", choices=["echo", "remote"], help="substitute generator (default echo)"
    )
    p.add_argument(
        "--filter-backend",
        dest="filter_backend",
        choices=["heuristic", "remote", "oracle", "none"],
        help="scorer used by the coherence filter (default heuristic)",
    )
    p.add_argument("--global-fraction", dest="global_fraction", type=float)
    p.add_argument("--min-sentences", dest="min_sentences", type=int)
    p.add_argument("--max-sentences", dest="max_sentences", type=int)
    p.add_argument("--ngram-order", dest="ngram_order", type=int)
    p.set_defaults(handler=cmd_augment)

    p = sub.add_parser("score", parents=[common], help="score discourses from a JSONL file")
    p.add_argument("--in", dest="in_path", required=True, help="JSONL with 'sentences' or 'text'")
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("rank", parents=[common], help="rank pairs and report accuracy")
    p.add_argument("--pairs", required=True, help="JSONL pair file (text_a/text_b/winner)")
    p.set_defaults(handler=cmd_rank)

    p = sub.add_parser("meta-eval", parents=[common], help="correlate a scorer with human ratings")
    p.add_argument("--ratings", required=True, help="SummEval-style annotation JSONL")
    p.add_argument("--scores", help="precomputed scores (doc_id/system_id/score JSONL)")
    p.add_argument("--level", choices=["sample", "dataset", "both"], default="both")
    p.add_argument("--buckets", action="store_true", help="add per-sentence-count reports")
    p.set_defaults(handler=cmd_metaeval)

    p = sub.add_parser("dataset-stats", parents=[common], help="summarize a dataset file")
    p.add_argument("--in", dest="in_path", required=True, help="dataset JSONL")
    p.set_defaults(handler=cmd_dataset_stats)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, InvalidInput, ParseError, IntegrityError, InsufficientData) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except BackendError as exc:
        logger.error("backend failure: %s", exc)
        return EXIT_PARTIAL
    except CoherevalError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
