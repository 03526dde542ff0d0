"""Deterministic per-candidate random sources.

Every randomized step derives its own generator from (run seed, origin id,
stage tag), so parallel and serial executions of a pipeline produce identical
output regardless of scheduling.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(seed: int, *parts: str) -> int:
    payload = "|".join([str(seed), *parts]).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(seed: int, *parts: str) -> random.Random:
    return random.Random(derive_seed(seed, *parts))
