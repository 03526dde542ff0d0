"""Core domain types: documents, discourses, and labeled samples."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidInput

DOCUMENT_SOURCES = ("news", "encyclopedia", "other")
LABELS = ("coherent", "incoherent")
PROVENANCES = ("original", "global_shuffle", "local_generative", "local_rule")


@dataclass(frozen=True)
class Document:
    """A raw input document before segmentation."""

    id: str
    text: str
    source: str = "other"

    def __post_init__(self):
        if not self.id:
            raise InvalidInput("document id must be non-empty")
        if not self.text.strip():
            raise InvalidInput(f"document {self.id!r} has empty text")
        if self.source not in DOCUMENT_SOURCES:
            raise InvalidInput(
                f"document {self.id!r} has unknown source {self.source!r}; "
                f"expected one of {DOCUMENT_SOURCES}"
            )


@dataclass(frozen=True)
class Discourse:
    """An ordered sequence of sentences. Equality is order-sensitive."""

    sentences: tuple[str, ...]
    origin_id: str = ""

    def __post_init__(self):
        sentences = tuple(self.sentences)
        if len(sentences) < 1:
            raise InvalidInput("a discourse needs at least one sentence")
        for i, s in enumerate(sentences):
            if not s.strip():
                raise InvalidInput(f"sentence {i} of discourse {self.origin_id!r} is empty")
        object.__setattr__(self, "sentences", sentences)

    def __len__(self) -> int:
        return len(self.sentences)

    def adjacent_pairs(self) -> list[tuple[str, str]]:
        """Consecutive sentence pairs, in order; empty for a single sentence."""
        return list(zip(self.sentences, self.sentences[1:]))

    def replace_sentence(self, index: int, sentence: str, origin_id: str | None = None) -> "Discourse":
        """New discourse with the 0-based ``index`` sentence swapped out."""
        if not 0 <= index < len(self.sentences):
            raise InvalidInput(f"sentence index {index} out of range for n={len(self)}")
        sentences = list(self.sentences)
        sentences[index] = sentence
        return Discourse(tuple(sentences), self.origin_id if origin_id is None else origin_id)


@dataclass(frozen=True)
class LabeledSample:
    """A discourse with a coherence label and augmentation provenance.

    ``pair_id`` groups a negative with its positive counterpart: both members
    of a pair carry the same value.
    """

    discourse: Discourse
    label: str
    provenance: str
    pair_id: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise InvalidInput(f"unknown label {self.label!r}")
        if self.provenance not in PROVENANCES:
            raise InvalidInput(f"unknown provenance {self.provenance!r}")
        if (self.provenance == "original") != (self.label == "coherent"):
            raise InvalidInput(
                f"sample {self.discourse.origin_id!r}: provenance {self.provenance!r} "
                f"is inconsistent with label {self.label!r}"
            )
        if not self.pair_id:
            raise InvalidInput("pair_id must be non-empty")


def as_discourse(value, origin_id: str = "") -> Discourse:
    """Coerce a Discourse, a sequence of sentences, or a raw text string.

    Strings are segmented into sentences; sequences are taken as
    already-segmented sentences. Validation helper for estimator-style entry
    points that accept loose input.
    """
    if isinstance(value, Discourse):
        return value
    if isinstance(value, str):
        if not value.strip():
            raise InvalidInput("cannot build a discourse from an empty string")
        from .corpus import segment_sentences

        return Discourse(tuple(segment_sentences(value)), origin_id)
    if isinstance(value, Sequence):
        return Discourse(tuple(str(s) for s in value), origin_id)
    raise InvalidInput(f"cannot interpret {type(value).__name__} as a discourse")


def as_discourses(values: Iterable) -> list[Discourse]:
    return [as_discourse(v, origin_id=str(i)) for i, v in enumerate(values)]
