"""Scorer backends: the pluggable contract plus native test implementations.

A backend maps a discourse to a coherence score in [0, 1], higher meaning
more coherent. Scores outside that range are contract violations and surface
as BackendError rather than being clamped.
"""

from __future__ import annotations

import math
import re
from abc import ABC, abstractmethod
from typing import Iterable, Mapping

from .discourse import Discourse, LabeledSample
from .errors import BackendError


class ScorerBackend(ABC):
    """Contract for coherence scorers.

    ``identity`` describes the backend for reports. Backends that cannot
    tolerate concurrent invocation set ``serial_only`` and callers serialize.
    """

    identity: str = "scorer"
    serial_only: bool = False

    @abstractmethod
    def score(self, discourse: Discourse) -> float:
        """Coherence of ``discourse`` in [0, 1]. Deterministic for fixed state."""


def checked_score(backend: ScorerBackend, discourse: Discourse) -> float:
    """Call a backend and enforce its range contract."""
    try:
        value = backend.score(discourse)
    except (LookupError, BackendError):
        raise
    except Exception as exc:
        raise BackendError(f"backend {backend.identity!r} failed: {exc}") from exc
    value = float(value)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise BackendError(
            f"backend {backend.identity!r} returned {value!r}, outside [0, 1]"
        )
    return value


class ConstantBackend(ScorerBackend):
    """Returns a fixed value for every input. Test double."""

    def __init__(self, value: float):
        self.value = value
        self.identity = f"constant:{value}"

    def score(self, discourse: Discourse) -> float:
        return self.value


class CallableBackend(ScorerBackend):
    """Adapts a plain function to the backend contract. Test double."""

    def __init__(self, fn, identity: str = "callable"):
        self.fn = fn
        self.identity = identity

    def score(self, discourse: Discourse) -> float:
        return self.fn(discourse)


# --- heuristic overlap scorer ----------------------------------------------

# Fixed stop-word list; changing it changes heuristic scores, so tests pin it.
STOP_WORDS = frozenset({
    "a", "an", "the", "and", "or", "but", "if", "then", "than", "so",
    "of", "to", "in", "on", "at", "for", "with", "as", "by", "from", "into",
    "is", "are", "was", "were", "be", "been", "being", "am",
    "has", "have", "had", "do", "does", "did", "will", "would", "can",
    "could", "shall", "should", "may", "might", "must",
    "it", "its", "this", "that", "these", "those", "there", "here",
    "he", "she", "they", "we", "you", "i", "him", "her", "them", "us", "me",
    "his", "hers", "their", "our", "your", "my",
    "not", "no", "nor", "up", "down", "out", "over", "under", "again",
    "who", "whom", "which", "what", "when", "where", "why", "how",
})

_WORD_RE = re.compile(r"[a-z0-9']+")


def content_words(sentence: str) -> set[str]:
    return {w for w in _WORD_RE.findall(sentence.lower()) if w not in STOP_WORDS}


def heuristic_score(discourse: Discourse) -> float:
    """Mean Jaccard overlap of content words across adjacent sentence pairs.

    A hermetic baseline scorer: smooth transitions share vocabulary. Single
    sentences score a neutral 0.5, as does a pair with no content words at
    all; a pair with disjoint content words scores 0.0.
    """
    pairs = discourse.adjacent_pairs()
    if not pairs:
        return 0.5
    scores = []
    for left, right in pairs:
        a, b = content_words(left), content_words(right)
        union = a | b
        if not union:
            scores.append(0.5)
        else:
            scores.append(len(a & b) / len(union))
    return sum(scores) / len(scores)


class HeuristicBackend(ScorerBackend):
    """Content-word overlap scorer; the offline default."""

    identity = "heuristic"

    def score(self, discourse: Discourse) -> float:
        return heuristic_score(discourse)


# --- oracle scorer ----------------------------------------------------------


def oracle_score(discourse: Discourse, label_table: Mapping[tuple[str, ...], str]) -> float:
    """1.0 for coherent-labeled discourses, 0.0 for incoherent-labeled ones.

    Lookup is by sentence content (order-sensitive). Unknown discourses raise
    LookupError.
    """
    key = tuple(discourse.sentences)
    if key not in label_table:
        raise LookupError(f"discourse not in oracle label table: {key!r}")
    return 1.0 if label_table[key] == "coherent" else 0.0


class OracleBackend(ScorerBackend):
    """Test-only scorer that reads labels from a table.

    ``from_dataset`` also registers every adjacent sentence pair of each
    labeled discourse, so the unified scorer can query two-sentence
    sub-discourses. A pair that occurs in any coherent discourse is a genuine
    transition and keeps the coherent label even if a negative reuses it.
    """

    def __init__(self, label_table: Mapping[tuple[str, ...], str], invert: bool = False):
        self.label_table = dict(label_table)
        self.invert = invert
        self.identity = "oracle:inverted" if invert else "oracle"

    @classmethod
    def from_dataset(
        cls,
        samples: Iterable[LabeledSample],
        invert: bool = False,
        include_pairs: bool = True,
    ) -> "OracleBackend":
        table: dict[tuple[str, ...], str] = {}

        def register(key: tuple[str, ...], label: str) -> None:
            if table.get(key) == "coherent":
                return
            table[key] = label

        ordered = sorted(samples, key=lambda s: s.label != "coherent")
        for sample in ordered:
            register(tuple(sample.discourse.sentences), sample.label)
            if include_pairs:
                for pair in sample.discourse.adjacent_pairs():
                    register(pair, sample.label)
        return cls(table, invert=invert)

    def score(self, discourse: Discourse) -> float:
        value = oracle_score(discourse, self.label_table)
        return 1.0 - value if self.invert else value
