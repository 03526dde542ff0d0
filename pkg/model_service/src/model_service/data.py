"""Reading the line-delimited dataset format and the two-part split.

This package consumes datasets strictly through their published file shape:
JSON lines with id, sentences, label ("coherent"/"incoherent"), provenance,
and pair_id. The two-part split exists to avoid leakage: a model never
scores or reconstructs a document it was trained on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import DataError

LABELS = ("coherent", "incoherent")


@dataclass(frozen=True)
class Sample:
    id: str
    sentences: tuple[str, ...]
    label: str
    provenance: str
    pair_id: str

    @property
    def text(self) -> str:
        return " ".join(self.sentences)


def load_dataset(path: str | Path) -> list[Sample]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such dataset file: {path}")
    samples: list[Sample] = []
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            try:
                sample = Sample(
                    id=str(record["id"]),
                    sentences=tuple(record["sentences"]),
                    label=str(record["label"]),
                    provenance=str(record["provenance"]),
                    pair_id=str(record["pair_id"]),
                )
            except (KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: missing field {exc}") from exc
            if sample.label not in LABELS:
                raise DataError(f"{path}:{lineno}: unknown label {sample.label!r}")
            if not sample.sentences:
                raise DataError(f"{path}:{lineno}: empty sentence list")
            samples.append(sample)
    if not samples:
        raise DataError(f"{path} holds no samples")
    return samples


def _part_of(group_id: str) -> str:
    digest = hashlib.sha256(group_id.encode("utf-8")).digest()
    return "a" if digest[0] % 2 == 0 else "b"


def two_part_split(group_ids: Sequence[str]) -> tuple[list[str], list[str]]:
    """Deterministically split ids into two disjoint halves by content hash.

    The assignment depends only on the id itself and the result is returned
    in sorted order, so it is stable across runs, machines, and dataset
    orderings.
    """
    ordered = sorted(set(group_ids))
    part_a = [g for g in ordered if _part_of(g) == "a"]
    part_b = [g for g in ordered if _part_of(g) == "b"]
    return part_a, part_b


def split_samples_by_part(samples: Sequence[Sample]) -> dict[str, list[Sample]]:
    """Group samples into the two parts by their pair_id, pairs kept whole."""
    groups = sorted({s.pair_id for s in samples})
    part_a, _ = two_part_split(groups)
    in_a = set(part_a)
    parts: dict[str, list[Sample]] = {"a": [], "b": []}
    for sample in samples:
        parts["a" if sample.pair_id in in_a else "b"].append(sample)
    return parts
