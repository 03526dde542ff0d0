"""Dataset loading, the two-part split, and the vocabulary."""

import json

import pytest

from model_service.data import Sample, load_dataset, split_samples_by_part, two_part_split
from model_service.errors import DataError
from model_service.vocab import (
    BOS,
    EOS,
    PAD,
    SEP,
    UNK,
    Vocabulary,
    detokenize,
    encode_discourse,
    tokenize,
)


def write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


def row(i, label="coherent", pair=None):
    return {
        "id": f"s{i}",
        "sentences": ["One thing happened.", "Then another."],
        "label": label,
        "provenance": "original",
        "pair_id": pair or f"p{i}",
    }


class TestLoadDataset:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_jsonl(path, [row(0), row(1, label="incoherent", pair="p0")])
        samples = load_dataset(path)
        assert len(samples) == 2
        assert samples[0] == Sample(
            id="s0",
            sentences=("One thing happened.", "Then another."),
            label="coherent",
            provenance="original",
            pair_id="p0",
        )
        assert samples[0].text == "One thing happened. Then another."

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(json.dumps(row(0)) + "\n{oops\n", encoding="utf-8")
        with pytest.raises(DataError, match=r"d\.jsonl:2"):
            load_dataset(path)

    def test_unknown_label(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_jsonl(path, [row(0, label="mediocre")])
        with pytest.raises(DataError, match="label"):
            load_dataset(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "d.jsonl"
        bad = row(0)
        del bad["pair_id"]
        write_jsonl(path, [bad])
        with pytest.raises(DataError, match="pair_id"):
            load_dataset(path)

    def test_empty_sentences(self, tmp_path):
        path = tmp_path / "d.jsonl"
        bad = row(0)
        bad["sentences"] = []
        write_jsonl(path, [bad])
        with pytest.raises(DataError, match="sentences"):
            load_dataset(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataError, match="no samples"):
            load_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_dataset(tmp_path / "absent.jsonl")


class TestTwoPartSplit:
    def test_disjoint_and_total(self):
        ids = [f"pair-{i}" for i in range(200)]
        part_a, part_b = two_part_split(ids)
        assert set(part_a) & set(part_b) == set()
        assert sorted(part_a + part_b) == sorted(ids)
        assert part_a and part_b

    def test_stable_across_order(self):
        ids = [f"pair-{i}" for i in range(50)]
        shuffled = list(reversed(ids))
        assert two_part_split(ids) == two_part_split(shuffled)

    def test_pairs_stay_together(self, tmp_path):
        rows = []
        for i in range(40):
            rows.append(row(2 * i, label="coherent", pair=f"p{i}"))
            rows.append(row(2 * i + 1, label="incoherent", pair=f"p{i}"))
        path = tmp_path / "d.jsonl"
        write_jsonl(path, rows)
        samples = load_dataset(path)
        parts = split_samples_by_part(samples)
        pairs_a = {s.pair_id for s in parts["a"]}
        pairs_b = {s.pair_id for s in parts["b"]}
        assert pairs_a & pairs_b == set()
        for part in (parts["a"], parts["b"]):
            for pid in {s.pair_id for s in part}:
                assert sum(1 for s in part if s.pair_id == pid) == 2


class TestVocabulary:
    def test_specials_are_fixed(self):
        assert (PAD, UNK, BOS, EOS, SEP) == (0, 1, 2, 3, 4)

    def test_tokenize_detokenize(self):
        tokens = tokenize("The crew began, then stopped.")
        assert tokens == ["the", "crew", "began", ",", "then", "stopped", "."]
        assert detokenize(tokens) == "The crew began, then stopped."

    def test_encode_decode_roundtrip(self):
        vocab = Vocabulary.build(["the crew began the survey.", "work continued."])
        ids = vocab.encode("the crew began.")
        assert all(i >= 5 for i in ids)
        assert vocab.decode(ids) == "The crew began."

    def test_unknown_maps_to_unk(self):
        vocab = Vocabulary.build(["alpha beta."])
        assert UNK in vocab.encode("gamma.")

    def test_decode_skips_specials(self):
        vocab = Vocabulary.build(["alpha beta."])
        ids = [BOS] + vocab.encode("alpha.") + [EOS, PAD]
        assert vocab.decode(ids) == "Alpha."

    def test_max_size_caps_vocabulary(self):
        texts = [f"word{i}" for i in range(50)]
        vocab = Vocabulary.build(texts, max_size=10)
        assert len(vocab) == 10

    def test_build_is_deterministic(self):
        texts = ["tie one", "tie two", "one two"]
        a = Vocabulary.build(texts)
        b = Vocabulary.build(list(reversed(texts)))
        assert a.to_payload() == b.to_payload()

    def test_save_load(self, tmp_path):
        vocab = Vocabulary.build(["alpha beta gamma."])
        path = tmp_path / "vocab.json"
        vocab.save(path)
        again = Vocabulary.load(path)
        assert again.to_payload() == vocab.to_payload()
        assert again.encode("beta") == vocab.encode("beta")

    def test_encode_discourse_joins_with_sep(self):
        vocab = Vocabulary.build(["alpha.", "beta."])
        ids = encode_discourse(vocab, ["alpha.", "beta."])
        assert ids.count(SEP) == 1
        left, right = ids[: ids.index(SEP)], ids[ids.index(SEP) + 1 :]
        assert left == vocab.encode("alpha.")
        assert right == vocab.encode("beta.")
