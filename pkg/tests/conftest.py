"""Shared fixtures: synthetic discourses with distinct, natural-ish sentences."""

import random

import pytest

from cohereval import Discourse

_NOUNS = ["harbor", "orchard", "museum", "quarry", "station", "bakery", "bridge", "garden"]
_VERBS = ["opened", "closed", "expanded", "flooded", "reopened", "settled", "shrank", "moved"]
_TAILS = [
    "before the first frost",
    "despite the protests",
    "after the audit",
    "without much notice",
    "under new management",
    "to everyone's surprise",
]


def synth_sentence(rng: random.Random, tag: str) -> str:
    return f"The {rng.choice(_NOUNS)} {rng.choice(_VERBS)} {rng.choice(_TAILS)} ({tag})."


def synth_discourse(origin_id: str, n: int, rng: random.Random) -> Discourse:
    # The tag makes every sentence unique, so a shuffle always has a
    # non-identity permutation to find.
    sentences = tuple(synth_sentence(rng, f"{origin_id}-{i}") for i in range(n))
    return Discourse(sentences, origin_id=origin_id)


def synth_sources(count: int, seed: int = 0, lengths=(2, 3, 4, 5)) -> list[Discourse]:
    rng = random.Random(seed)
    return [synth_discourse(f"src-{i:04d}", lengths[i % len(lengths)], rng) for i in range(count)]


@pytest.fixture
def sources12():
    return synth_sources(12, seed=3)


@pytest.fixture
def sources40():
    return synth_sources(40, seed=9)
