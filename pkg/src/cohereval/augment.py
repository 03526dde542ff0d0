"""Negative-sample construction: global shuffling, local substitution with
difficulty control, the rule-based baseline, and dataset assembly.

Local substitution masks an interior sentence, truncates the context to one
side of the mask so a generator can only stay coherent with that side, and
then drops candidates whose negatives score below a filtering threshold
(too obviously incoherent to be useful training signal).
"""

from __future__ import annotations

import hashlib
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from .backends import ScorerBackend, checked_score
from .discourse import Discourse, LabeledSample
from .errors import (
    BackendError,
    EmptyGeneration,
    InsufficientData,
    InvalidInput,
    NoInterior,
    TooShort,
)
from .seeding import derive_rng

logger = logging.getLogger(__name__)

SIDE_PREFIX = "prefix"
SIDE_SUFFIX = "suffix"
SIDE_BOTH = "both"

LOCAL_STRATEGIES = ("generative", "rule")


@dataclass(frozen=True)
class AugmentationConfig:
    min_sentences: int = 2
    max_sentences: int = 5
    filter_threshold: float = 0.5
    global_fraction: float = 0.25
    seed: int = 0
    ngram_order: int = 2

    def __post_init__(self):
        if not 0.0 <= self.filter_threshold <= 1.0:
            raise InvalidInput(f"filter_threshold must be in [0, 1], got {self.filter_threshold}")
        if not 2 <= self.min_sentences <= self.max_sentences:
            raise InvalidInput(
                f"need 2 <= min_sentences <= max_sentences, got "
                f"{self.min_sentences}, {self.max_sentences}"
            )
        if not 0.0 <= self.global_fraction <= 1.0:
            raise InvalidInput(f"global_fraction must be in [0, 1], got {self.global_fraction}")
        if self.ngram_order < 1:
            raise InvalidInput(f"ngram_order must be >= 1, got {self.ngram_order}")

    def to_record(self) -> dict:
        return {
            "min_sentences": self.min_sentences,
            "max_sentences": self.max_sentences,
            "filter_threshold": self.filter_threshold,
            "global_fraction": self.global_fraction,
            "seed": self.seed,
            "ngram_order": self.ngram_order,
        }


@dataclass(frozen=True)
class MaskedContext:
    """One-sided context around a masked interior sentence.

    ``mask_index`` is the 1-based position of the masked sentence in its
    source discourse; it is always strictly interior.
    """

    sentences_before: tuple[str, ...]
    sentences_after: tuple[str, ...]
    side_kept: str
    mask_index: int

    def __post_init__(self):
        if self.side_kept not in (SIDE_PREFIX, SIDE_SUFFIX, SIDE_BOTH):
            raise InvalidInput(f"unknown side_kept {self.side_kept!r}")
        if self.side_kept == SIDE_PREFIX and self.sentences_after:
            raise InvalidInput("prefix-kept context must have no trailing sentences")
        if self.side_kept == SIDE_SUFFIX and self.sentences_before:
            raise InvalidInput("suffix-kept context must have no leading sentences")
        if self.side_kept in (SIDE_PREFIX, SIDE_BOTH):
            if self.mask_index != len(self.sentences_before) + 1:
                raise InvalidInput("mask_index inconsistent with leading context")
        if self.mask_index < 2:
            raise InvalidInput(f"mask_index must be interior (>= 2), got {self.mask_index}")
        if self.side_kept in (SIDE_SUFFIX, SIDE_BOTH) and not self.sentences_after:
            raise InvalidInput("suffix side kept but no trailing sentences")
        if self.side_kept == SIDE_PREFIX and not self.sentences_before:
            raise InvalidInput("prefix side kept but no leading sentences")

    def context_hash(self) -> str:
        parts = [*self.sentences_before, "[mask]", *self.sentences_after]
        return hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CandidatePair:
    """A positive discourse and its locally corrupted negative."""

    positive: Discourse
    negative: Discourse
    substitute: str
    filter_score: float | None
    strategy: str

    def __post_init__(self):
        if self.strategy not in LOCAL_STRATEGIES:
            raise InvalidInput(f"unknown strategy {self.strategy!r}")
        if len(self.positive) != len(self.negative):
            raise InvalidInput("local negative must keep the positive's length")
        diffs = [
            i
            for i, (a, b) in enumerate(zip(self.positive.sentences, self.negative.sentences))
            if a != b
        ]
        if len(diffs) != 1:
            raise InvalidInput(
                f"local negative must differ in exactly one position, differs in {len(diffs)}"
            )


@dataclass
class GenerationExchange:
    """Audit record of one generator call."""

    context_hash: str
    side_kept: str
    substitute: str
    filter_score: float | None = None
    origin_id: str = ""

    def to_record(self) -> dict:
        return {
            "context_hash": self.context_hash,
            "side_kept": self.side_kept,
            "substitute": self.substitute,
            "filter_score": self.filter_score,
            "origin_id": self.origin_id,
        }


# --- generator backends -----------------------------------------------------


class GeneratorBackend:
    """Contract for substitute-sentence generators."""

    identity: str = "generator"

    def generate(self, context: MaskedContext) -> str:
        raise NotImplementedError


class EchoGenerator(GeneratorBackend):
    """Returns a fixed sentence for every context. Offline test double."""

    def __init__(self, sentence: str = "Meanwhile the committee reviewed an unrelated matter."):
        self.sentence = sentence
        self.identity = "echo"

    def generate(self, context: MaskedContext) -> str:
        return self.sentence


# --- operations -------------------------------------------------------------


def global_shuffle(discourse: Discourse, rng) -> Discourse:
    """Permute sentence order, rejecting the identity permutation."""
    n = len(discourse)
    if n < 2:
        raise TooShort(f"cannot shuffle a {n}-sentence discourse")
    if len(set(discourse.sentences)) == 1:
        raise InvalidInput("all sentences identical; every permutation is the identity")
    original = discourse.sentences
    for _ in range(1000):
        shuffled = list(original)
        rng.shuffle(shuffled)
        if tuple(shuffled) != original:
            return Discourse(tuple(shuffled), origin_id=discourse.origin_id)
    raise InvalidInput(f"could not find a non-identity permutation for {discourse.origin_id!r}")


def select_mask_index(discourse: Discourse, rng) -> int:
    """Uniform 1-based index over the non-opening, non-closing sentences."""
    n = len(discourse)
    if n < 3:
        raise NoInterior(f"a {n}-sentence discourse has no interior sentence")
    return rng.randint(2, n - 1)


def truncate_context(discourse: Discourse, mask_index: int, rng) -> MaskedContext:
    """Keep the context on one side of the mask, chosen by a fair coin."""
    n = len(discourse)
    if not 1 < mask_index < n:
        raise InvalidInput(f"mask index {mask_index} is not interior for n={n}")
    if rng.random() < 0.5:
        return MaskedContext(
            sentences_before=discourse.sentences[: mask_index - 1],
            sentences_after=(),
            side_kept=SIDE_PREFIX,
            mask_index=mask_index,
        )
    return MaskedContext(
        sentences_before=(),
        sentences_after=discourse.sentences[mask_index:],
        side_kept=SIDE_SUFFIX,
        mask_index=mask_index,
    )


def generate_substitute(
    context: MaskedContext,
    backend: GeneratorBackend,
    retries: int = 2,
    backoff: float = 0.2,
    audit: list[GenerationExchange] | None = None,
    origin_id: str = "",
) -> str:
    """Ask the generator for a substitute sentence, with bounded retries.

    Transport failures are retried with exponential backoff and then surface
    as BackendError; an empty generation raises EmptyGeneration immediately.
    Either way only the candidate fails, never the batch. Completed calls are
    appended to ``audit`` when given.
    """
    attempt = 0
    while True:
        try:
            sentence = backend.generate(context)
            break
        except Exception as exc:
            if attempt >= retries:
                raise BackendError(
                    f"generator {backend.identity!r} failed after {attempt + 1} attempts: {exc}"
                ) from exc
            time.sleep(backoff * (2**attempt))
            attempt += 1
    sentence = (sentence or "").strip()
    if audit is not None:
        audit.append(
            GenerationExchange(
                context_hash=context.context_hash(),
                side_kept=context.side_kept,
                substitute=sentence,
                origin_id=origin_id,
            )
        )
    if not sentence:
        raise EmptyGeneration(f"generator {backend.identity!r} returned an empty sentence")
    return sentence


def coherence_filter(
    pairs: Sequence[CandidatePair],
    scorer: ScorerBackend,
    threshold: float,
    on_score: Callable[[int, CandidatePair, float | None], None] | None = None,
) -> list[CandidatePair]:
    """Keep pairs whose negative scores at or above the threshold.

    Negatives scoring below the threshold are too obviously incoherent to be
    hard negatives. Scorer failures drop the pair with a warning. ``on_score``
    observes every scoring outcome (None on failure), e.g. for audit logs.
    """
    kept: list[CandidatePair] = []
    for i, pair in enumerate(pairs):
        try:
            score = checked_score(scorer, pair.negative)
        except (BackendError, LookupError) as exc:
            logger.warning(
                "filter scorer failed on candidate %s, dropping: %s",
                pair.negative.origin_id,
                exc,
            )
            if on_score is not None:
                on_score(i, pair, None)
            continue
        if on_score is not None:
            on_score(i, pair, score)
        if score >= threshold:
            kept.append(replace(pair, filter_score=score))
    return kept


_TOKEN_RE = re.compile(r"[a-z0-9']+")


def _ngrams(sentence: str, order: int) -> set[tuple[str, ...]]:
    tokens = _TOKEN_RE.findall(sentence.lower())
    if len(tokens) < order:
        return set()
    return {tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1)}


def rule_based_substitute(
    discourse: Discourse,
    mask_index: int,
    pool: Sequence[Discourse],
    ngram_order: int = 2,
) -> str:
    """Pick the pool sentence with the highest n-gram overlap with the masked one.

    Overlap is the number of shared n-grams over lowercased,
    punctuation-stripped tokens. Ties break to the earliest pool sentence.
    """
    if not pool:
        raise InvalidInput("rule-based substitution needs a non-empty pool")
    for other in pool:
        if other.origin_id == discourse.origin_id:
            raise InvalidInput(
                f"pool must exclude the masked discourse's origin {discourse.origin_id!r}"
            )
    if not 1 < mask_index < len(discourse):
        raise InvalidInput(f"mask index {mask_index} is not interior for n={len(discourse)}")
    target = _ngrams(discourse.sentences[mask_index - 1], ngram_order)
    best_sentence: str | None = None
    best_overlap = -1
    for other in pool:
        for sentence in other.sentences:
            overlap = len(target & _ngrams(sentence, ngram_order))
            if overlap > best_overlap:
                best_overlap = overlap
                best_sentence = sentence
    assert best_sentence is not None
    return best_sentence


# --- dataset assembly -------------------------------------------------------


@dataclass
class BuildReport:
    """Machine-readable summary emitted alongside a built dataset."""

    counts: dict
    filter_threshold: float
    seed: int
    generator_identity: str | None
    filter_identity: str | None
    local_strategy: str
    config: dict
    wall_time_s: float = 0.0

    def to_record(self) -> dict:
        from . import __version__

        return {
            "counts": dict(self.counts),
            "filter_threshold": self.filter_threshold,
            "seed": self.seed,
            "generator_identity": self.generator_identity,
            "filter_identity": self.filter_identity,
            "local_strategy": self.local_strategy,
            "config": dict(self.config),
            "wall_time_s": self.wall_time_s,
            "version": __version__,
        }


@dataclass
class BuildResult:
    samples: list[LabeledSample]
    report: BuildReport
    exchanges: list[GenerationExchange] = field(default_factory=list)


def _partition(
    discourses: list[Discourse], config: AugmentationConfig
) -> tuple[list[Discourse], list[Discourse]]:
    """Split sources into a global-augmentation pool and a local pool.

    Two-sentence discourses have no interior sentence, so they can only be
    shuffled; they go to the global pool (or are skipped when the global
    fraction is zero). The rest fill the global pool up to the configured
    fraction, chosen by the run seed, and the remainder becomes the local
    pool. Both pools keep source order.
    """
    two_sent = [d for d in discourses if len(d) == 2]
    multi = [d for d in discourses if len(d) >= 3]
    target = round(config.global_fraction * len(discourses))
    if config.global_fraction == 0.0:
        if two_sent:
            logger.warning(
                "%d two-sentence discourses skipped: global augmentation disabled",
                len(two_sent),
            )
        return [], multi
    fill_needed = max(0, target - len(two_sent))
    if len(two_sent) > target:
        logger.warning(
            "two-sentence discourses (%d) exceed the global target (%d); taking all of them",
            len(two_sent),
            target,
        )
    indices = list(range(len(multi)))
    derive_rng(config.seed, "partition").shuffle(indices)
    fill_set = set(indices[:fill_needed])
    global_pool = two_sent + [d for i, d in enumerate(multi) if i in fill_set]
    local_pool = [d for i, d in enumerate(multi) if i not in fill_set]
    return global_pool, local_pool


def build_dataset(
    config: AugmentationConfig,
    sources: Iterable[Discourse],
    generator: GeneratorBackend | None = None,
    filter_scorer: ScorerBackend | None = None,
    local_strategy: str = "generative",
    workers: int = 1,
) -> BuildResult:
    """Construct a labeled dataset of coherent/incoherent pairs.

    Every emitted negative is paired with its positive counterpart, so the
    output size is exactly 2 * (global negatives + kept local pairs).
    Generation runs with up to ``workers`` concurrent in-flight calls; all
    randomness is derived per candidate, so the output is identical for any
    worker count.
    """
    if local_strategy not in LOCAL_STRATEGIES:
        raise InvalidInput(f"unknown local strategy {local_strategy!r}")
    started = time.time()
    discourses = list(sources)
    eligible = [d for d in discourses if len(d) >= 2]
    n_short = len(discourses) - len(eligible)
    if n_short:
        logger.warning("%d single-sentence sources skipped", n_short)
    if not eligible:
        raise InsufficientData(
            f"need at least 1 discourse with 2+ sentences, got 0 of {len(discourses)}"
        )
    global_pool, local_pool = _partition(eligible, config)

    samples: list[LabeledSample] = []
    for d in global_pool:
        negative = global_shuffle(d, derive_rng(config.seed, d.origin_id, "shuffle"))
        pair_id = f"{d.origin_id}#global"
        samples.append(
            LabeledSample(
                discourse=Discourse(d.sentences, origin_id=f"{pair_id}#pos"),
                label="coherent",
                provenance="original",
                pair_id=pair_id,
            )
        )
        samples.append(
            LabeledSample(
                discourse=Discourse(negative.sentences, origin_id=f"{pair_id}#neg"),
                label="incoherent",
                provenance="global_shuffle",
                pair_id=pair_id,
            )
        )
    n_global = len(global_pool)

    exchanges: list[GenerationExchange] = []
    candidates: list[CandidatePair] = []
    n_failed = 0
    if local_strategy == "generative":
        if generator is None and local_pool:
            raise InvalidInput("generative strategy needs a generator backend")
        prepared = []
        for d in local_pool:
            k = select_mask_index(d, derive_rng(config.seed, d.origin_id, "mask"))
            ctx = truncate_context(d, k, derive_rng(config.seed, d.origin_id, "truncate"))
            prepared.append((d, k, ctx))

        def run_one(item):
            d, k, ctx = item
            audit: list[GenerationExchange] = []
            try:
                sentence = generate_substitute(
                    ctx, generator, audit=audit, origin_id=d.origin_id
                )
                return d, k, sentence, audit
            except (BackendError, EmptyGeneration) as exc:
                logger.warning("generation failed for %s: %s", d.origin_id, exc)
                return d, k, None, audit

        if workers > 1 and prepared:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run_one, prepared))
        else:
            results = [run_one(item) for item in prepared]

        for d, k, sentence, audit in results:
            exchanges.extend(audit)
            if sentence is None:
                n_failed += 1
                continue
            if sentence == d.sentences[k - 1]:
                logger.warning("substitute equals the original sentence for %s; skipped", d.origin_id)
                n_failed += 1
                continue
            candidates.append(
                CandidatePair(
                    positive=d,
                    negative=d.replace_sentence(k - 1, sentence),
                    substitute=sentence,
                    filter_score=None,
                    strategy="generative",
                )
            )
    else:
        for d in local_pool:
            k = select_mask_index(d, derive_rng(config.seed, d.origin_id, "mask"))
            pool_rest = [p for p in local_pool if p.origin_id != d.origin_id]
            if not pool_rest:
                logger.warning("no pool discourses available for %s; skipped", d.origin_id)
                n_failed += 1
                continue
            sentence = rule_based_substitute(d, k, pool_rest, config.ngram_order)
            if sentence == d.sentences[k - 1]:
                logger.warning("substitute equals the original sentence for %s; skipped", d.origin_id)
                n_failed += 1
                continue
            candidates.append(
                CandidatePair(
                    positive=d,
                    negative=d.replace_sentence(k - 1, sentence),
                    substitute=sentence,
                    filter_score=None,
                    strategy="rule",
                )
            )

    exchange_by_origin = {e.origin_id: e for e in exchanges}
    if local_strategy == "generative" and filter_scorer is not None:

        def note_score(_i: int, pair: CandidatePair, score: float | None) -> None:
            exchange = exchange_by_origin.get(pair.positive.origin_id)
            if exchange is not None:
                exchange.filter_score = score

        kept = coherence_filter(
            candidates, filter_scorer, config.filter_threshold, on_score=note_score
        )
    else:
        kept = candidates

    if candidates and not kept:
        logger.warning("no local candidates survived filtering at threshold %s", config.filter_threshold)

    for pair in kept:
        origin = pair.positive.origin_id
        pair_id = f"{origin}#local"
        samples.append(
            LabeledSample(
                discourse=Discourse(pair.positive.sentences, origin_id=f"{pair_id}#pos"),
                label="coherent",
                provenance="original",
                pair_id=pair_id,
            )
        )
        samples.append(
            LabeledSample(
                discourse=Discourse(pair.negative.sentences, origin_id=f"{pair_id}#neg"),
                label="incoherent",
                provenance=f"local_{pair.strategy}",
                pair_id=pair_id,
            )
        )

    if n_global == 0 and not candidates:
        raise InsufficientData(
            f"no augmentable sources: 0 global candidates and 0 local candidates "
            f"from {len(eligible)} eligible discourses"
        )

    counts = {
        "n_pos_global": n_global,
        "n_neg_global": n_global,
        "n_local_candidates": len(candidates),
        "n_local_kept": len(kept),
        "n_local_failed": n_failed,
        "total": len(samples),
    }
    assert counts["total"] == 2 * (counts["n_neg_global"] + counts["n_local_kept"])
    report = BuildReport(
        counts=counts,
        filter_threshold=config.filter_threshold,
        seed=config.seed,
        generator_identity=generator.identity if generator is not None else None,
        filter_identity=(
            filter_scorer.identity
            if (filter_scorer is not None and local_strategy == "generative")
            else None
        ),
        local_strategy=local_strategy,
        config=config.to_record(),
        wall_time_s=time.time() - started,
    )
    return BuildResult(samples=samples, report=report, exchanges=exchanges)
