"""Word-level vocabulary shared by the classifier and the generator."""

from __future__ import annotations

import json
import re
from collections import Counter
from pathlib import Path
from typing import Iterable

PAD, UNK, BOS, EOS, SEP = 0, 1, 2, 3, 4
_SPECIALS = ["<pad>", "<unk>", "<bos>", "<eos>", "<sep>"]

__all__ = [
    "PAD", "UNK", "BOS", "EOS", "SEP",
    "Vocabulary", "detokenize", "encode_discourse", "tokenize",
]

_TOKEN_RE = re.compile(r"[a-z0-9']+|[.,!?;:]")
_PUNCT = {".", ",", "!", "?", ";", ":"}


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def detokenize(tokens: list[str]) -> str:
    """Join tokens back into a sentence: no space before punctuation,
    capitalized first word."""
    parts: list[str] = []
    for token in tokens:
        if token in _PUNCT and parts:
            parts[-1] += token
        else:
            parts.append(token)
    text = " ".join(parts)
    return text[:1].upper() + text[1:] if text else text


def encode_discourse(vocab: "Vocabulary", sentences: Iterable[str]) -> list[int]:
    """Encode a sentence sequence as one id stream with separators between
    sentences; both models consume this layout."""
    ids: list[int] = []
    for i, sentence in enumerate(sentences):
        if i:
            ids.append(SEP)
        ids.extend(vocab.encode(sentence))
    return ids


class Vocabulary:
    def __init__(self, tokens: list[str]):
        self.tokens = list(_SPECIALS) + [t for t in tokens if t not in _SPECIALS]
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def build(cls, texts: Iterable[str], max_size: int = 4000) -> "Vocabulary":
        counts = Counter()
        for text in texts:
            counts.update(tokenize(text))
        # count-descending, then alphabetical, so the vocabulary is stable
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        keep = max(0, max_size - len(_SPECIALS))
        return cls([token for token, _ in ranked[:keep]])

    def encode(self, text: str) -> list[int]:
        return [self.index.get(t, UNK) for t in tokenize(text)]

    def decode(self, ids: Iterable[int]) -> str:
        words = [self.tokens[i] for i in ids if i >= len(_SPECIALS)]
        return detokenize(words)

    def to_payload(self) -> list[str]:
        return self.tokens[len(_SPECIALS):]

    @classmethod
    def from_payload(cls, payload: list[str]) -> "Vocabulary":
        return cls(list(payload))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_payload(), ensure_ascii=False), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_payload(json.loads(Path(path).read_text(encoding="utf-8")))
