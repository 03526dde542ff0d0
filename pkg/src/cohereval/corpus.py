"""Corpus handling: sentence segmentation, discourse sampling, dataset files.

The dataset file format is one JSON object per line, UTF-8 with LF endings,
with fixed field order {id, sentences, label, provenance, pair_id} so that a
write/read/write cycle is byte-stable.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

from .discourse import Discourse, Document, LabeledSample
from .errors import IntegrityError, InvalidInput, ParseError, TooShort

# Trailing characters that may close a sentence after the terminal punctuation.
_CLOSERS = "\"'”’)]»"
# Characters that may open the next sentence instead of an uppercase letter.
_OPENERS = "\"'“‘([«"

# Lowercased abbreviations whose trailing period does not end a sentence.
# Abbreviations followed by digits (No. 5, Fig. 3) need no entry here: a
# boundary requires the next word to start with an uppercase letter or quote.
ABBREVIATIONS = frozenset({
    "mr.", "mrs.", "ms.", "dr.", "prof.", "rev.", "gen.", "sen.", "rep.",
    "gov.", "capt.", "sgt.", "col.", "lt.", "jr.", "sr.",
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "al.",
    "inc.", "ltd.", "co.", "corp.", "dept.",
    "u.s.", "u.k.", "u.n.", "d.c.",
    "a.m.", "p.m.", "st.", "mt.", "ave.", "blvd.",
    "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.",
    "oct.", "nov.", "dec.",
})


def _is_boundary(token: str, next_token: str) -> bool:
    core = token.rstrip(_CLOSERS)
    if not core or core[-1] not in ".!?":
        return False
    if core[-1] == "." and core.lower() in ABBREVIATIONS:
        return False
    first = next_token[0]
    return first.isupper() or first in _OPENERS


def segment_sentences(text: str) -> list[str]:
    """Split raw text into sentences with a deterministic rule-based splitter.

    A boundary is a terminal . ! or ? (optionally followed by a closing quote
    or bracket) whose next word starts with an uppercase letter or an opening
    quote, unless the word is a known abbreviation. Joining the output with
    single spaces reconstructs the input modulo whitespace.
    """
    tokens = text.split()
    if not tokens:
        raise InvalidInput("cannot segment empty text")
    sentences: list[str] = []
    start = 0
    for i in range(len(tokens) - 1):
        if _is_boundary(tokens[i], tokens[i + 1]):
            sentences.append(" ".join(tokens[start : i + 1]))
            start = i + 1
    sentences.append(" ".join(tokens[start:]))
    return sentences


def sample_leading(doc: Document, rng: random.Random, min_n: int = 2, max_n: int = 5) -> Discourse:
    """Take a uniformly sized prefix of ``min_n`` to ``max_n`` leading sentences."""
    if not 1 <= min_n <= max_n:
        raise InvalidInput(f"need 1 <= min_n <= max_n, got {min_n}, {max_n}")
    sentences = segment_sentences(doc.text)
    if len(sentences) < min_n:
        raise TooShort(
            f"document {doc.id!r} has {len(sentences)} sentences, need at least {min_n}"
        )
    k = rng.randint(min_n, min(max_n, len(sentences)))
    return Discourse(tuple(sentences[:k]), origin_id=doc.id)


# --- dataset files ---------------------------------------------------------

_DATASET_FIELDS = ("id", "sentences", "label", "provenance", "pair_id")


def sample_to_record(sample: LabeledSample) -> dict:
    return {
        "id": sample.discourse.origin_id,
        "sentences": list(sample.discourse.sentences),
        "label": sample.label,
        "provenance": sample.provenance,
        "pair_id": sample.pair_id,
    }


def record_to_sample(record: dict) -> LabeledSample:
    missing = [f for f in _DATASET_FIELDS if f not in record]
    if missing:
        raise InvalidInput(f"missing fields {missing}")
    sentences = record["sentences"]
    if not isinstance(sentences, list) or not all(isinstance(s, str) for s in sentences):
        raise InvalidInput("'sentences' must be a list of strings")
    return LabeledSample(
        discourse=Discourse(tuple(sentences), origin_id=str(record["id"])),
        label=record["label"],
        provenance=record["provenance"],
        pair_id=str(record["pair_id"]),
    )


def check_pair_integrity(samples: Sequence[LabeledSample]) -> None:
    """Every negative's pair_id must resolve to exactly one coherent sample."""
    coherent_by_pair = Counter(s.pair_id for s in samples if s.label == "coherent")
    for s in samples:
        if s.label != "incoherent":
            continue
        n = coherent_by_pair.get(s.pair_id, 0)
        if n != 1:
            raise IntegrityError(
                f"negative {s.discourse.origin_id!r} has pair_id {s.pair_id!r} "
                f"matching {n} coherent samples, expected exactly 1"
            )


def write_dataset(samples: Sequence[LabeledSample], path: str | Path) -> None:
    check_pair_integrity(samples)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sample in samples:
            fh.write(json.dumps(sample_to_record(sample), ensure_ascii=False))
            fh.write("\n")


def read_dataset(path: str | Path) -> list[LabeledSample]:
    samples: list[LabeledSample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(record, dict):
                raise ParseError("record is not an object", line=lineno)
            try:
                samples.append(record_to_sample(record))
            except InvalidInput as exc:
                raise ParseError(str(exc), line=lineno) from exc
    check_pair_integrity(samples)
    return samples


def split_dataset(
    samples: Sequence[LabeledSample], valid_fraction: float, rng: random.Random
) -> tuple[list[LabeledSample], list[LabeledSample]]:
    """Split into (train, valid) without separating any pair_id group.

    Whole pair groups are assigned to the validation side until it reaches
    ``round(valid_fraction * len(samples))`` samples, so the realized sizes can
    differ from exact proportion by at most one group.
    """
    if not 0 < valid_fraction < 1:
        raise InvalidInput(f"valid_fraction must be in (0, 1), got {valid_fraction}")
    group_order: list[str] = []
    seen: set[str] = set()
    group_sizes: Counter[str] = Counter()
    for s in samples:
        if s.pair_id not in seen:
            seen.add(s.pair_id)
            group_order.append(s.pair_id)
        group_sizes[s.pair_id] += 1
    shuffled = list(group_order)
    rng.shuffle(shuffled)
    target = round(valid_fraction * len(samples))
    valid_groups: set[str] = set()
    count = 0
    for pair_id in shuffled:
        if count >= target:
            break
        valid_groups.add(pair_id)
        count += group_sizes[pair_id]
    train = [s for s in samples if s.pair_id not in valid_groups]
    valid = [s for s in samples if s.pair_id in valid_groups]
    return train, valid


# --- raw document input ----------------------------------------------------


def load_documents(path: str | Path) -> list[Document]:
    """Load raw documents from a directory of .txt files or a JSONL file.

    JSONL records carry {id, text, source}; text files use their stem as id
    and source "other". Directory listings are sorted for determinism.
    """
    path = Path(path)
    if path.is_dir():
        docs = []
        for txt in sorted(path.glob("*.txt")):
            docs.append(Document(id=txt.stem, text=txt.read_text(encoding="utf-8"), source="other"))
        if not docs:
            raise InvalidInput(f"no .txt files found in directory {path}")
        return docs
    if not path.exists():
        raise InvalidInput(f"source path does not exist: {path}")
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            try:
                docs.append(
                    Document(
                        id=str(record["id"]),
                        text=str(record["text"]),
                        source=str(record.get("source", "other")),
                    )
                )
            except (KeyError, InvalidInput) as exc:
                raise ParseError(str(exc), line=lineno) from exc
    return docs


def iter_discourses(
    documents: Iterable[Document],
    seed: int,
    min_n: int = 2,
    max_n: int = 5,
) -> tuple[list[Discourse], list[str]]:
    """Sample a leading-sentence discourse from each document.

    Returns the discourses plus the ids of documents skipped for being too
    short. Sampling is driven by a per-document seed so results do not depend
    on document order or prior draws.
    """
    from .seeding import derive_rng

    discourses: list[Discourse] = []
    skipped: list[str] = []
    for doc in documents:
        rng = derive_rng(seed, doc.id, "sample_leading")
        try:
            discourses.append(sample_leading(doc, rng, min_n=min_n, max_n=max_n))
        except TooShort:
            skipped.append(doc.id)
    return discourses, skipped
