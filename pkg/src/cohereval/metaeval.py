"""Meta-evaluation of coherence scorers against human judgments.

Correlations come in two aggregation levels. Sample level computes a
coefficient per document over its system outputs and averages the defined
ones. Dataset level computes one coefficient over all document/system cells
flattened into a single pair of vectors. Pairwise-ranking accuracy and
length-bucketed breakdowns round out the report surface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .backends import ScorerBackend
from .corpus import segment_sentences
from .discourse import Discourse
from .errors import InvalidInput, ParseError, Undefined
from .scoring import RANK_A, RANK_B, RANK_TIE, ScoringConfig, pairwise_rank, unified_score

LEVEL_SAMPLE = "sample"
LEVEL_DATASET = "dataset"

#: report field -> measure, in report order
MEASURES = ("rho", "r", "tau")


def _as_vector(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidInput(f"{name} must be one-dimensional")
    if arr.size < 2:
        raise InvalidInput(f"{name} needs at least 2 values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite values")
    return arr


def _check_pair(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    xa = _as_vector(x, "x")
    ya = _as_vector(y, "y")
    if xa.size != ya.size:
        raise InvalidInput(f"length mismatch: {xa.size} vs {ya.size}")
    if np.all(xa == xa[0]):
        raise Undefined("x is constant")
    if np.all(ya == ya[0]):
        raise Undefined("y is constant")
    return xa, ya


def _clip(value: float) -> float:
    return float(min(1.0, max(-1.0, value)))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation. Constant input raises Undefined."""
    xa, ya = _check_pair(x, y)
    return _clip(stats.pearsonr(xa, ya).statistic)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation with average ranks for ties."""
    xa, ya = _check_pair(x, y)
    return _clip(stats.spearmanr(xa, ya).statistic)


def kendall(x: Sequence[float], y: Sequence[float]) -> float:
    """Kendall's tau-b, tie-corrected."""
    xa, ya = _check_pair(x, y)
    value = stats.kendalltau(xa, ya, variant="b").statistic
    if not np.isfinite(value):
        raise Undefined("tau-b denominator vanished")
    return _clip(value)


_MEASURE_FNS: dict[str, Callable[[Sequence[float], Sequence[float]], float]] = {
    "rho": spearman,
    "r": pearson,
    "tau": kendall,
}


@dataclass(frozen=True)
class RatingMatrix:
    """Human ratings for n documents x J system outputs, no missing cells."""

    document_ids: tuple[str, ...]
    system_ids: tuple[str, ...]
    outputs: tuple[tuple[Discourse, ...], ...]
    human: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        n, j = len(self.document_ids), len(self.system_ids)
        if n == 0:
            raise InvalidInput("rating matrix has no documents")
        if j == 0:
            raise InvalidInput("rating matrix has no systems")
        if len(self.outputs) != n or len(self.human) != n:
            raise InvalidInput("outputs/human row count must match document count")
        for doc_id, row_out, row_h in zip(self.document_ids, self.outputs, self.human):
            if len(row_out) != j or len(row_h) != j:
                raise InvalidInput(f"document {doc_id!r} is missing cells")
            for value in row_h:
                if not np.isfinite(value):
                    raise InvalidInput(f"document {doc_id!r} has a non-finite rating")

    @property
    def n_documents(self) -> int:
        return len(self.document_ids)

    @property
    def n_systems(self) -> int:
        return len(self.system_ids)

    def score_all(self, scorer: ScorerBackend, config: ScoringConfig | None = None):
        """Unified-score every cell; rows align with the matrix."""
        config = config or ScoringConfig()
        return tuple(
            tuple(unified_score(d, scorer, config).final for d in row) for row in self.outputs
        )


@dataclass(frozen=True)
class CorrelationReport:
    level: str
    rho: float | None = None
    r: float | None = None
    tau: float | None = None
    reasons: tuple[str, ...] = ()
    skipped_documents: int = 0
    skip_reasons: tuple[str, ...] = ()

    def __post_init__(self):
        if self.level not in (LEVEL_SAMPLE, LEVEL_DATASET):
            raise InvalidInput(f"unknown report level {self.level!r}")
        for name in MEASURES:
            value = getattr(self, name)
            if value is not None and not -1.0 <= value <= 1.0:
                raise InvalidInput(f"{name}={value} outside [-1, 1]")

    def defined_mean(self) -> float | None:
        present = [getattr(self, name) for name in MEASURES if getattr(self, name) is not None]
        if not present:
            return None
        return float(np.mean(present))

    def to_record(self) -> dict:
        return {
            "level": self.level,
            "rho": self.rho,
            "r": self.r,
            "tau": self.tau,
            "reasons": list(self.reasons),
            "skipped_documents": self.skipped_documents,
            "skip_reasons": list(self.skip_reasons),
        }


def _validate_scores(matrix: RatingMatrix, scorer_scores) -> tuple[tuple[float, ...], ...]:
    rows = tuple(tuple(float(v) for v in row) for row in scorer_scores)
    if len(rows) != matrix.n_documents:
        raise InvalidInput(
            f"scorer_scores has {len(rows)} rows for {matrix.n_documents} documents"
        )
    for doc_id, row in zip(matrix.document_ids, rows):
        if len(row) != matrix.n_systems:
            raise InvalidInput(f"scorer_scores row for {doc_id!r} is missing cells")
    return rows


def sample_level(matrix: RatingMatrix, scorer_scores, measures=MEASURES) -> CorrelationReport:
    """Mean per-document correlation, skipping documents where it is undefined.

    A document with constant human ratings (or constant model scores) has no
    defined correlation; it is dropped from the mean and counted instead of
    being imputed as zero.
    """
    rows = _validate_scores(matrix, scorer_scores)
    per_measure: dict[str, list[float]] = {m: [] for m in measures}
    skip_reasons: list[str] = []
    for doc_id, model_row, human_row in zip(matrix.document_ids, rows, matrix.human):
        if matrix.n_systems < 2:
            skip_reasons.append(f"{doc_id}: fewer than 2 system outputs")
            continue
        doc_values: dict[str, float] = {}
        reason = None
        for m in measures:
            try:
                doc_values[m] = _MEASURE_FNS[m](model_row, human_row)
            except Undefined as exc:
                reason = str(exc)
                break
        if reason is not None:
            skip_reasons.append(f"{doc_id}: {reason}")
            continue
        for m, value in doc_values.items():
            per_measure[m].append(value)
    values: dict[str, float | None] = {}
    reasons: list[str] = []
    for m in measures:
        if per_measure[m]:
            values[m] = float(np.mean(per_measure[m]))
        else:
            values[m] = None
            reasons.append(f"{m}: no document with a defined coefficient")
    return CorrelationReport(
        level=LEVEL_SAMPLE,
        rho=values.get("rho"),
        r=values.get("r"),
        tau=values.get("tau"),
        reasons=tuple(reasons),
        skipped_documents=len(skip_reasons),
        skip_reasons=tuple(skip_reasons),
    )


def dataset_level(matrix: RatingMatrix, scorer_scores, measures=MEASURES) -> CorrelationReport:
    """One correlation over all cells flattened document-major."""
    rows = _validate_scores(matrix, scorer_scores)
    model = [v for row in rows for v in row]
    human = [v for row in matrix.human for v in row]
    values: dict[str, float | None] = {}
    reasons: list[str] = []
    for m in measures:
        try:
            values[m] = _MEASURE_FNS[m](model, human)
        except Undefined as exc:
            values[m] = None
            reasons.append(f"{m}: {exc}")
    return CorrelationReport(
        level=LEVEL_DATASET,
        rho=values.get("rho"),
        r=values.get("r"),
        tau=values.get("tau"),
        reasons=tuple(reasons),
    )


def ranking_accuracy(
    pairs: Sequence[tuple[Discourse, Discourse, str]],
    scorer: ScorerBackend,
    config: ScoringConfig | None = None,
) -> float:
    """Fraction of pairs ranked like the gold winner; predicted ties earn 0.5."""
    if not pairs:
        raise InvalidInput("ranking accuracy needs at least one pair")
    config = config or ScoringConfig()
    credit = 0.0
    for first, second, gold in pairs:
        if gold not in (RANK_A, RANK_B):
            raise InvalidInput(f"gold winner must be {RANK_A!r} or {RANK_B!r}, got {gold!r}")
        predicted = pairwise_rank(first, second, scorer, config)
        if predicted == RANK_TIE:
            credit += 0.5
        elif predicted == gold:
            credit += 1.0
    return credit / len(pairs)


@dataclass(frozen=True)
class BucketReport:
    """Dataset-level correlations restricted to outputs of one sentence count."""

    sentence_count: int
    n_outputs: int
    report: CorrelationReport | None
    reason: str | None = None

    def to_record(self) -> dict:
        return {
            "sentence_count": self.sentence_count,
            "n_outputs": self.n_outputs,
            "report": self.report.to_record() if self.report is not None else None,
            "mean": self.report.defined_mean() if self.report is not None else None,
            "reason": self.reason,
        }


def length_bucket_report(matrix: RatingMatrix, scorer_scores) -> list[BucketReport]:
    """Dataset-level correlations per sentence-count bucket, ascending."""
    rows = _validate_scores(matrix, scorer_scores)
    buckets: dict[int, list[tuple[float, float]]] = {}
    for row_out, model_row, human_row in zip(matrix.outputs, rows, matrix.human):
        for discourse, model_v, human_v in zip(row_out, model_row, human_row):
            buckets.setdefault(len(discourse), []).append((model_v, human_v))
    reports: list[BucketReport] = []
    for count in sorted(buckets):
        cells = buckets[count]
        if len(cells) < 2:
            reports.append(
                BucketReport(
                    sentence_count=count,
                    n_outputs=len(cells),
                    report=None,
                    reason="fewer than 2 outputs in bucket",
                )
            )
            continue
        model = [c[0] for c in cells]
        human = [c[1] for c in cells]
        values: dict[str, float | None] = {}
        reasons: list[str] = []
        for m in MEASURES:
            try:
                values[m] = _MEASURE_FNS[m](model, human)
            except Undefined as exc:
                values[m] = None
                reasons.append(f"{m}: {exc}")
        reports.append(
            BucketReport(
                sentence_count=count,
                n_outputs=len(cells),
                report=CorrelationReport(
                    level=LEVEL_DATASET,
                    rho=values.get("rho"),
                    r=values.get("r"),
                    tau=values.get("tau"),
                    reasons=tuple(reasons),
                ),
            )
        )
    return reports


# --- input adapters ---------------------------------------------------------


def _mean(values: Sequence[float]) -> float:
    return float(sum(values) / len(values))


def load_summeval(path: str | Path) -> RatingMatrix:
    """Load a SummEval-style annotation file into a rating matrix.

    Expects JSON lines with a document key ("id" or "doc_id"), a system key
    ("model_id" or "system_id"), the system output under "decoded" (or
    "summary"/"output"), and "expert_annotations" as a list of objects with a
    "coherence" rating. Ratings are averaged across annotators. Every
    document must carry the same system set.
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInput(f"no such file: {path}")
    cells: dict[tuple[str, str], tuple[Discourse, float]] = {}
    doc_order: list[str] = []
    sys_order: list[str] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(record, dict):
                raise ParseError("expected a JSON object", lineno)
            doc_id = record.get("doc_id", record.get("id"))
            sys_id = record.get("system_id", record.get("model_id"))
            text = record.get("decoded", record.get("summary", record.get("output")))
            annotations = record.get("expert_annotations")
            if doc_id is None or sys_id is None:
                raise ParseError("missing document or system identifier", lineno)
            if not isinstance(text, str) or not text.strip():
                raise ParseError("missing system output text", lineno)
            if not isinstance(annotations, list) or not annotations:
                raise ParseError("missing expert_annotations", lineno)
            try:
                ratings = [float(a["coherence"]) for a in annotations]
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad coherence annotation: {exc}", lineno) from exc
            doc_id, sys_id = str(doc_id), str(sys_id)
            key = (doc_id, sys_id)
            if key in cells:
                raise ParseError(f"duplicate cell for {doc_id!r} x {sys_id!r}", lineno)
            discourse = Discourse(
                tuple(segment_sentences(text)), origin_id=f"{doc_id}/{sys_id}"
            )
            cells[key] = (discourse, _mean(ratings))
            if doc_id not in doc_order:
                doc_order.append(doc_id)
            if sys_id not in sys_order:
                sys_order.append(sys_id)
    if not cells:
        raise InvalidInput(f"{path} contains no annotation records")
    outputs = []
    human = []
    for doc_id in doc_order:
        row_out = []
        row_h = []
        for sys_id in sys_order:
            if (doc_id, sys_id) not in cells:
                raise InvalidInput(f"document {doc_id!r} is missing system {sys_id!r}")
            discourse, rating = cells[(doc_id, sys_id)]
            row_out.append(discourse)
            row_h.append(rating)
        outputs.append(tuple(row_out))
        human.append(tuple(row_h))
    return RatingMatrix(
        document_ids=tuple(doc_order),
        system_ids=tuple(sys_order),
        outputs=tuple(outputs),
        human=tuple(human),
    )


def load_pair_file(path: str | Path) -> list[tuple[Discourse, Discourse, str]]:
    """Load a pairwise-ranking file: JSON lines of two texts plus the winner.

    Canonical keys are "text_a", "text_b", and "winner" ("a" or "b"). Lines
    may instead use "coherent"/"incoherent", which map to a/b with winner
    "a". An "id" key, when present, names the pair.
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInput(f"no such file: {path}")
    pairs: list[tuple[Discourse, Discourse, str]] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(record, dict):
                raise ParseError("expected a JSON object", lineno)
            pair_id = str(record.get("id", f"pair-{lineno}"))
            if "coherent" in record and "incoherent" in record:
                text_a, text_b, winner = record["coherent"], record["incoherent"], RANK_A
            else:
                text_a = record.get("text_a")
                text_b = record.get("text_b")
                winner = record.get("winner")
            if not isinstance(text_a, str) or not isinstance(text_b, str):
                raise ParseError("missing pair texts", lineno)
            if winner not in (RANK_A, RANK_B):
                raise ParseError(f"winner must be 'a' or 'b', got {winner!r}", lineno)
            first = Discourse(tuple(segment_sentences(text_a)), origin_id=f"{pair_id}/a")
            second = Discourse(tuple(segment_sentences(text_b)), origin_id=f"{pair_id}/b")
            pairs.append((first, second, winner))
    if not pairs:
        raise InvalidInput(f"{path} contains no pairs")
    return pairs


# --- rendering --------------------------------------------------------------


def _fmt(value: float | None) -> str:
    return "undef" if value is None else f"{value:+.4f}"


def render_correlation_table(rows: Sequence[tuple[str, CorrelationReport]]) -> str:
    """Align labeled reports into a fixed-width text table."""
    width = max([len("report"), *(len(label) for label, _ in rows)])
    lines = [f"{'report'.ljust(width)}  {'rho':>8}  {'r':>8}  {'tau':>8}  skipped"]
    for label, report in rows:
        lines.append(
            f"{label.ljust(width)}  {_fmt(report.rho):>8}  {_fmt(report.r):>8}  "
            f"{_fmt(report.tau):>8}  {report.skipped_documents}"
        )
    return "\n".join(lines)


def render_bucket_table(buckets: Sequence[BucketReport]) -> str:
    lines = [f"{'sentences':>9}  {'outputs':>7}  {'rho':>8}  {'r':>8}  {'tau':>8}  {'mean':>8}"]
    for bucket in buckets:
        if bucket.report is None:
            lines.append(
                f"{bucket.sentence_count:>9}  {bucket.n_outputs:>7}  "
                f"{'undef':>8}  {'undef':>8}  {'undef':>8}  {'undef':>8}"
            )
            continue
        r = bucket.report
        lines.append(
            f"{bucket.sentence_count:>9}  {bucket.n_outputs:>7}  {_fmt(r.rho):>8}  "
            f"{_fmt(r.r):>8}  {_fmt(r.tau):>8}  {_fmt(r.defined_mean()):>8}"
        )
    return "\n".join(lines)
