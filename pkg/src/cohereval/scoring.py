"""Unified global + local coherence scoring over pluggable backends.

The final score interpolates a whole-discourse score with the mean of
adjacent-pair scores: final = (1 - w) * global + w * local, where w is the
local weight. Single-sentence discourses have no pair scores and fall back to
the global score alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .backends import HeuristicBackend, ScorerBackend, checked_score
from .discourse import Discourse, as_discourse
from .errors import InvalidInput

RANK_A = "a"
RANK_B = "b"
RANK_TIE = "tie"


@dataclass(frozen=True)
class ScoringConfig:
    """Knobs of the unified strategy: interpolation weight and tie band."""

    local_weight: float = 0.5
    tie_epsilon: float = 1e-9

    def __post_init__(self):
        if not 0.0 <= self.local_weight <= 1.0:
            raise InvalidInput(f"local_weight must be in [0, 1], got {self.local_weight}")
        if self.tie_epsilon < 0:
            raise InvalidInput(f"tie_epsilon must be >= 0, got {self.tie_epsilon}")


@dataclass(frozen=True)
class ScoreBreakdown:
    """All intermediate quantities behind one final coherence score."""

    global_score: float
    pair_scores: tuple[float, ...]
    local_score: float | None
    local_weight: float
    final: float

    def to_record(self) -> dict:
        return {
            "global_score": self.global_score,
            "pair_scores": list(self.pair_scores),
            "local_score": self.local_score,
            "local_weight": self.local_weight,
            "final": self.final,
        }


def global_score(discourse: Discourse, backend: ScorerBackend) -> float:
    """Score the whole discourse with the backend."""
    return checked_score(backend, discourse)


def local_scores(discourse: Discourse, backend: ScorerBackend) -> list[float]:
    """Score each consecutive sentence pair as a two-sentence discourse.

    Returns n - 1 scores for an n-sentence discourse, the empty list for a
    single sentence.
    """
    scores = []
    for i, (left, right) in enumerate(discourse.adjacent_pairs()):
        pair = Discourse((left, right), origin_id=f"{discourse.origin_id}#pair{i}")
        scores.append(checked_score(backend, pair))
    return scores


def unified_score(
    discourse: Discourse,
    backend: ScorerBackend,
    config: ScoringConfig = ScoringConfig(),
) -> ScoreBreakdown:
    """Combine global and mean-of-pairs local scores by interpolation."""
    g = global_score(discourse, backend)
    pairs = local_scores(discourse, backend)
    if pairs:
        local = sum(pairs) / len(pairs)
        w = config.local_weight
        final = (1.0 - w) * g + w * local
        # Guard float rounding so the result stays a convex combination.
        lo, hi = min(g, local), max(g, local)
        final = min(max(final, lo), hi)
    else:
        local = None
        final = g
    return ScoreBreakdown(
        global_score=g,
        pair_scores=tuple(pairs),
        local_score=local,
        local_weight=config.local_weight,
        final=final,
    )


def pairwise_rank(
    a: Discourse,
    b: Discourse,
    backend: ScorerBackend,
    config: ScoringConfig = ScoringConfig(),
) -> str:
    """Pick the more coherent of two discourses: "a", "b", or "tie"."""
    final_a = unified_score(a, backend, config).final
    final_b = unified_score(b, backend, config).final
    if final_a > final_b + config.tie_epsilon:
        return RANK_A
    if final_b > final_a + config.tie_epsilon:
        return RANK_B
    return RANK_TIE


class CoherenceScorer(BaseEstimator):
    """Estimator-style front end for unified coherence scoring.

    Accepts discourses as Discourse objects, sentence lists, or single
    strings. ``fit`` resolves the backend and has no training of its own, so
    the scorer can sit in pipelines and parameter sweeps (e.g. over
    ``local_weight``) like any other estimator.
    """

    def __init__(self, backend="heuristic", local_weight: float = 0.5, tie_epsilon: float = 1e-9):
        self.backend = backend
        self.local_weight = local_weight
        self.tie_epsilon = tie_epsilon

    def _config(self) -> ScoringConfig:
        return ScoringConfig(local_weight=self.local_weight, tie_epsilon=self.tie_epsilon)

    def fit(self, X=None, y=None):
        if isinstance(self.backend, ScorerBackend):
            self.backend_ = self.backend
        elif self.backend == "heuristic":
            self.backend_ = HeuristicBackend()
        else:
            raise InvalidInput(
                f"unknown backend {self.backend!r}; pass 'heuristic' or a ScorerBackend instance"
            )
        self._config()
        return self

    def _backend(self) -> ScorerBackend:
        if not hasattr(self, "backend_"):
            self.fit()
        return self.backend_

    def score_breakdowns(self, X: Iterable) -> list[ScoreBreakdown]:
        backend = self._backend()
        config = self._config()
        return [unified_score(as_discourse(x), backend, config) for x in X]

    def predict(self, X: Iterable) -> np.ndarray:
        """Final coherence score for each input discourse."""
        return np.array([b.final for b in self.score_breakdowns(X)], dtype=float)

    def rank_pair(self, a, b) -> str:
        return pairwise_rank(as_discourse(a), as_discourse(b), self._backend(), self._config())

    def rank_pairs(self, pairs: Sequence[tuple]) -> list[str]:
        return [self.rank_pair(a, b) for a, b in pairs]
