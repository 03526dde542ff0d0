"""Training entrypoints for the classifier and the generator.

Both models train from scratch on desk-scale corpora. All randomness is
seeded through the config, so a rerun with the same inputs writes the same
checkpoint. The two-part mode trains one generator per dataset half so each
half is reconstructed by a model that never saw it.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import torch
from torch import nn

from .data import Sample, split_samples_by_part
from .errors import ConfigError
from .models import CoherenceClassifier, Seq2SeqGenerator, save_checkpoint
from .vocab import EOS, PAD, SEP, Vocabulary, encode_discourse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 6
    lr: float = 2e-3
    batch_size: int = 32
    embedding_dim: int = 48
    hidden_dim: int = 96
    seed: int = 0
    valid_fraction: float = 0.2
    max_len: int = 120
    max_vocab: int = 4000

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 < self.valid_fraction < 1.0:
            raise ConfigError(f"valid_fraction must be in (0,1), got {self.valid_fraction}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


def _pad_batch(rows: list[list[int]], max_len: int) -> torch.Tensor:
    rows = [row[:max_len] or [PAD] for row in rows]
    width = max(len(row) for row in rows)
    out = torch.full((len(rows), width), PAD, dtype=torch.long)
    for i, row in enumerate(rows):
        out[i, : len(row)] = torch.tensor(row, dtype=torch.long)
    return out


def _batches(count: int, batch_size: int, rng: random.Random):
    order = list(range(count))
    rng.shuffle(order)
    for start in range(0, count, batch_size):
        yield order[start : start + batch_size]


# --- classifier -------------------------------------------------------------


def _split_pairs(samples: Sequence[Sample], fraction: float, rng: random.Random):
    groups = sorted({s.pair_id for s in samples})
    rng.shuffle(groups)
    target = round(fraction * len(samples))
    valid_groups: set[str] = set()
    count = 0
    for group in groups:
        if count >= target:
            break
        size = sum(1 for s in samples if s.pair_id == group)
        valid_groups.add(group)
        count += size
    train = [s for s in samples if s.pair_id not in valid_groups]
    valid = [s for s in samples if s.pair_id in valid_groups]
    return train, valid


def train_classifier(
    samples: Sequence[Sample], config: TrainConfig, out_path: str | Path
) -> dict:
    """Fit the coherence classifier; keeps the epoch with the best valid loss.

    Raises ConfigError when the dataset is empty or single-class. The
    train/valid split never separates a positive from its negative, so
    validation accuracy is measured on unseen pairs.
    """
    if not samples:
        raise ConfigError("classifier training needs a non-empty dataset")
    labels = {s.label for s in samples}
    if len(labels) < 2:
        raise ConfigError(f"classifier training needs both labels, got only {labels}")

    torch.manual_seed(config.seed)
    rng = random.Random(config.seed)
    train, valid = _split_pairs(samples, config.valid_fraction, rng)
    if not train or not valid:
        raise ConfigError(
            f"dataset too small to split: {len(train)} train / {len(valid)} valid"
        )

    vocab = Vocabulary.build((s.text for s in train), max_size=config.max_vocab)
    model = CoherenceClassifier(len(vocab), config.embedding_dim, config.hidden_dim)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    loss_fn = nn.BCEWithLogitsLoss()

    def encode(batch: list[Sample]) -> tuple[torch.Tensor, torch.Tensor]:
        ids = _pad_batch([encode_discourse(vocab, s.sentences) for s in batch], config.max_len)
        y = torch.tensor([1.0 if s.label == "coherent" else 0.0 for s in batch])
        return ids, y

    valid_ids, valid_y = encode(list(valid))
    epoch_losses: list[float] = []
    valid_losses: list[float] = []
    best = (float("inf"), None)
    for epoch in range(config.epochs):
        model.train()
        total = 0.0
        seen = 0
        for pick in _batches(len(train), config.batch_size, random.Random(config.seed * 100003 + epoch)):
            batch = [train[i] for i in pick]
            ids, y = encode(batch)
            optimizer.zero_grad()
            loss = loss_fn(model(ids), y)
            loss.backward()
            optimizer.step()
            total += loss.detach().item() * len(batch)
            seen += len(batch)
        epoch_losses.append(total / seen)
        model.eval()
        with torch.no_grad():
            v_loss = float(loss_fn(model(valid_ids), valid_y))
        valid_losses.append(v_loss)
        if v_loss < best[0]:
            best = (v_loss, {k: v.clone() for k, v in model.state_dict().items()})
        logger.info("classifier epoch %d: train %.4f valid %.4f", epoch, epoch_losses[-1], v_loss)

    model.load_state_dict(best[1])
    model.eval()
    with torch.no_grad():
        predictions = (model.coherence(valid_ids) >= 0.5).float()
    accuracy = float((predictions == valid_y).float().mean())
    model_id = save_checkpoint(model, vocab, out_path)
    return {
        "kind": "classifier",
        "model_id": model_id,
        "epoch_losses": epoch_losses,
        "valid_losses": valid_losses,
        "valid_accuracy": accuracy,
        "n_train": len(train),
        "n_valid": len(valid),
        "config": asdict(config),
    }


# --- generator --------------------------------------------------------------


def _generator_examples(
    discourses: Sequence[tuple[str, ...]], vocab: Vocabulary, rng: random.Random
) -> list[tuple[list[int], list[int]]]:
    """One example per interior sentence: one-sided context -> the sentence.

    A kept prefix ends with a separator (the mask slot follows it); a kept
    suffix starts with one (the mask slot precedes it).
    """
    examples = []
    for sentences in discourses:
        n = len(sentences)
        for k in range(2, n):  # interior positions, 1-based
            target = vocab.encode(sentences[k - 1]) + [EOS]
            if rng.random() < 0.5:
                context = encode_discourse(vocab, sentences[: k - 1]) + [SEP]
            else:
                context = [SEP] + encode_discourse(vocab, sentences[k:])
            examples.append((context, target))
    return examples


def train_generator(
    discourses: Sequence[tuple[str, ...]], config: TrainConfig, out_path: str | Path
) -> dict:
    """Fit the infilling generator on coherent discourses of three or more
    sentences; shorter ones have no interior and are skipped with a warning."""
    usable = [tuple(d) for d in discourses if len(d) >= 3]
    skipped = len(discourses) - len(usable)
    if skipped:
        logger.warning("%d discourses have no interior sentence; skipped", skipped)
    if not usable:
        raise ConfigError("generator training needs discourses with at least 3 sentences")

    torch.manual_seed(config.seed)
    vocab = Vocabulary.build((" ".join(d) for d in usable), max_size=config.max_vocab)
    examples = _generator_examples(usable, vocab, random.Random(config.seed))
    model = Seq2SeqGenerator(len(vocab), config.embedding_dim, config.hidden_dim)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    loss_fn = nn.CrossEntropyLoss(ignore_index=PAD)

    epoch_losses: list[float] = []
    for epoch in range(config.epochs):
        model.train()
        total = 0.0
        seen = 0
        for pick in _batches(len(examples), config.batch_size, random.Random(config.seed * 100003 + epoch)):
            batch = [examples[i] for i in pick]
            context = _pad_batch([c for c, _ in batch], config.max_len)
            target = _pad_batch([t for _, t in batch], config.max_len)
            optimizer.zero_grad()
            logits = model(context, target)
            loss = loss_fn(logits.reshape(-1, logits.shape[-1]), target.reshape(-1))
            loss.backward()
            optimizer.step()
            total += loss.detach().item() * len(batch)
            seen += len(batch)
        epoch_losses.append(total / seen)
        logger.info("generator epoch %d: train %.4f", epoch, epoch_losses[-1])

    model.eval()
    model_id = save_checkpoint(model, vocab, out_path)
    return {
        "kind": "generator",
        "model_id": model_id,
        "epoch_losses": epoch_losses,
        "n_examples": len(examples),
        "n_skipped_short": skipped,
        "config": asdict(config),
    }


# --- two-part leakage protocol ----------------------------------------------


def two_part_training(
    samples: Sequence[Sample], config: TrainConfig, out_dir: str | Path
) -> dict:
    """Train one generator per dataset half; each half is served by the model
    trained on the other, so no document is reconstructed by a model that saw
    it. Returns the manifest, which is also written to out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    parts = split_samples_by_part(samples)
    manifest: dict = {}
    for name in ("a", "b"):
        part = parts[name]
        discourses = [s.sentences for s in part if s.label == "coherent" and len(s.sentences) >= 3]
        if not discourses:
            raise ConfigError(f"part {name} has no trainable discourse")
        path = out_dir / f"generator_{name}.pt"
        report = train_generator(discourses, config, path)
        manifest[f"part_{name}"] = {
            "ids": sorted({s.pair_id for s in part}),
            "model": path.name,
            "model_id": report["model_id"],
            "predicts_for": "b" if name == "a" else "a",
        }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return manifest
