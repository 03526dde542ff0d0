"""The two small recurrent models and their checkpoint format.

Both are trained from scratch on the desk corpus; there is no pretrained
initialization. Checkpoints bundle weights, vocabulary, and hyperparameters
in one file, and the served model_id is a content hash of the weights, so a
reloaded checkpoint always reports the same identity.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import torch
from torch import nn

from .vocab import BOS, EOS, PAD, SEP, Vocabulary


def _state_digest(state_dict: dict) -> str:
    h = hashlib.sha256()
    for key in sorted(state_dict):
        h.update(key.encode("utf-8"))
        h.update(state_dict[key].detach().cpu().numpy().tobytes())
    return h.hexdigest()[:12]


class CoherenceClassifier(nn.Module):
    """Bidirectional GRU over the token stream, mean-pooled, sigmoid head."""

    kind = "classifier"

    def __init__(self, vocab_size: int, embedding_dim: int = 48, hidden_dim: int = 96):
        super().__init__()
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.embedding = nn.Embedding(vocab_size, embedding_dim, padding_idx=PAD)
        self.rnn = nn.GRU(embedding_dim, hidden_dim, batch_first=True, bidirectional=True)
        self.head = nn.Linear(2 * hidden_dim, 1)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        mask = (ids != PAD).float().unsqueeze(-1)
        states, _ = self.rnn(self.embedding(ids))
        pooled = (states * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
        return self.head(pooled).squeeze(-1)

    def coherence(self, ids: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.forward(ids))


class Seq2SeqGenerator(nn.Module):
    """GRU encoder over the one-sided context, GRU decoder for the sentence."""

    kind = "generator"

    def __init__(self, vocab_size: int, embedding_dim: int = 48, hidden_dim: int = 96):
        super().__init__()
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.embedding = nn.Embedding(vocab_size, embedding_dim, padding_idx=PAD)
        self.encoder = nn.GRU(embedding_dim, hidden_dim, batch_first=True)
        self.decoder = nn.GRU(embedding_dim, hidden_dim, batch_first=True)
        self.head = nn.Linear(hidden_dim, vocab_size)

    def encode(self, context_ids: torch.Tensor) -> torch.Tensor:
        _, hidden = self.encoder(self.embedding(context_ids))
        return hidden

    def forward(self, context_ids: torch.Tensor, target_ids: torch.Tensor) -> torch.Tensor:
        """Teacher-forced logits for every target position."""
        hidden = self.encode(context_ids)
        bos = torch.full(
            (target_ids.shape[0], 1), BOS, dtype=torch.long, device=target_ids.device
        )
        decoder_in = torch.cat([bos, target_ids[:, :-1]], dim=1)
        states, _ = self.decoder(self.embedding(decoder_in), hidden)
        return self.head(states)

    @torch.no_grad()
    def generate(
        self,
        context_ids: torch.Tensor,
        max_new_tokens: int,
        temperature: float,
        rng: torch.Generator | None = None,
    ) -> list[int]:
        """Decode one sequence: greedy at temperature 0, sampled otherwise."""
        hidden = self.encode(context_ids.unsqueeze(0))
        token = torch.tensor([[BOS]], dtype=torch.long)
        out: list[int] = []
        for _ in range(max_new_tokens):
            states, hidden = self.decoder(self.embedding(token), hidden)
            logits = self.head(states[:, -1, :]).squeeze(0)
            logits[PAD] = float("-inf")
            logits[BOS] = float("-inf")
            logits[SEP] = float("-inf")
            if temperature <= 0.0:
                next_id = int(logits.argmax())
            else:
                probs = torch.softmax(logits / temperature, dim=-1)
                next_id = int(torch.multinomial(probs, 1, generator=rng))
            if next_id == EOS:
                break
            out.append(next_id)
            token = torch.tensor([[next_id]], dtype=torch.long)
        return out


def save_checkpoint(model: nn.Module, vocab: Vocabulary, path: str | Path) -> str:
    """Write weights + vocabulary + shape; returns the content-hash model id."""
    state = model.state_dict()
    model_id = f"{model.kind}-{_state_digest(state)}"
    torch.save(
        {
            "kind": model.kind,
            "model_id": model_id,
            "state_dict": state,
            "vocab": vocab.to_payload(),
            "embedding_dim": model.embedding_dim,
            "hidden_dim": model.hidden_dim,
        },
        path,
    )
    return model_id


def load_checkpoint(path: str | Path) -> tuple[nn.Module, Vocabulary, str]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    vocab = Vocabulary.from_payload(payload["vocab"])
    cls = {"classifier": CoherenceClassifier, "generator": Seq2SeqGenerator}[payload["kind"]]
    model = cls(len(vocab), payload["embedding_dim"], payload["hidden_dim"])
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, vocab, payload["model_id"]
