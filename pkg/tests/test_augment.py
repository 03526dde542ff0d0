import logging
import random
import re
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohereval import (
    AugmentationConfig,
    BackendError,
    CallableBackend,
    CandidatePair,
    ConstantBackend,
    Discourse,
    EchoGenerator,
    EmptyGeneration,
    GeneratorBackend,
    HeuristicBackend,
    InsufficientData,
    InvalidInput,
    MaskedContext,
    NoInterior,
    TooShort,
    build_dataset,
    coherence_filter,
    generate_substitute,
    global_shuffle,
    rule_based_substitute,
    select_mask_index,
    truncate_context,
)
from cohereval.augment import SIDE_PREFIX, SIDE_SUFFIX

from conftest import synth_discourse, synth_sources


def make_d(*sentences, origin="d"):
    return Discourse(tuple(sentences), origin_id=origin)


# --- config -----------------------------------------------------------------


def test_config_defaults_match_documented_values():
    config = AugmentationConfig()
    assert config.filter_threshold == 0.5
    assert (config.min_sentences, config.max_sentences) == (2, 5)
    assert config.global_fraction == 0.25
    assert config.ngram_order == 2


@pytest.mark.parametrize(
    "kwargs",
    [
        {"filter_threshold": -0.1},
        {"filter_threshold": 1.5},
        {"min_sentences": 1},
        {"min_sentences": 6, "max_sentences": 5},
        {"global_fraction": 1.2},
        {"ngram_order": 0},
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(InvalidInput):
        AugmentationConfig(**kwargs)


# --- MaskedContext ----------------------------------------------------------


def test_masked_context_prefix_shape():
    ctx = MaskedContext(("s1",), (), SIDE_PREFIX, 2)
    assert ctx.mask_index == 2


def test_masked_context_rejects_inconsistent_shapes():
    with pytest.raises(InvalidInput):
        MaskedContext(("s1",), ("s3",), SIDE_PREFIX, 2)
    with pytest.raises(InvalidInput):
        MaskedContext(("s1",), (), SIDE_SUFFIX, 2)
    with pytest.raises(InvalidInput):
        MaskedContext(("s1", "s2"), (), SIDE_PREFIX, 2)  # k must be len(before)+1
    with pytest.raises(InvalidInput):
        MaskedContext((), ("s2",), "sideways", 2)
    with pytest.raises(InvalidInput):
        MaskedContext((), ("s2",), SIDE_SUFFIX, 1)  # never the opening sentence


# --- global shuffle ---------------------------------------------------------


def test_shuffle_two_sentences_swaps():
    d = make_d("First comes first.", "Second comes second.")
    out = global_shuffle(d, random.Random(0))
    assert out.sentences == (d.sentences[1], d.sentences[0])


def test_shuffle_never_identity_and_preserves_multiset():
    for seed in range(200):
        d = synth_discourse("s", 3, random.Random(seed))
        out = global_shuffle(d, random.Random(seed))
        assert out.sentences != d.sentences
        assert sorted(out.sentences) == sorted(d.sentences)


def test_shuffle_single_sentence_too_short():
    with pytest.raises(TooShort):
        global_shuffle(make_d("Alone."), random.Random(0))


def test_shuffle_all_identical_sentences_rejected():
    d = make_d("Same line.", "Same line.", "Same line.")
    with pytest.raises(InvalidInput):
        global_shuffle(d, random.Random(0))


@given(n=st.integers(min_value=2, max_value=8), seed=st.integers(0, 99_999))
@settings(max_examples=150, deadline=None)
def test_shuffle_property(n, seed):
    d = synth_discourse("prop", n, random.Random(seed))
    out = global_shuffle(d, random.Random(seed + 1))
    assert out.sentences != d.sentences
    assert Counter(out.sentences) == Counter(d.sentences)
    assert out.origin_id == d.origin_id


# --- mask selection ---------------------------------------------------------


def test_mask_index_three_sentences_forced():
    d = synth_discourse("m", 3, random.Random(0))
    for seed in range(20):
        assert select_mask_index(d, random.Random(seed)) == 2


def test_mask_index_range_five_sentences():
    d = synth_discourse("m", 5, random.Random(0))
    seen = {select_mask_index(d, random.Random(seed)) for seed in range(100)}
    assert seen == {2, 3, 4}


def test_mask_index_needs_interior():
    with pytest.raises(NoInterior):
        select_mask_index(synth_discourse("m", 2, random.Random(0)), random.Random(0))


# --- context truncation -----------------------------------------------------


def test_truncate_prefix_keeps_leading_context():
    d = make_d("s1", "s2", "s3")
    for seed in range(50):
        ctx = truncate_context(d, 2, random.Random(seed))
        if ctx.side_kept == SIDE_PREFIX:
            assert ctx.sentences_before == ("s1",)
            assert ctx.sentences_after == ()
            break
    else:
        pytest.fail("prefix side never chosen in 50 draws")


def test_truncate_suffix_keeps_trailing_context():
    d = make_d("s1", "s2", "s3")
    for seed in range(50):
        ctx = truncate_context(d, 2, random.Random(seed))
        if ctx.side_kept == SIDE_SUFFIX:
            assert ctx.sentences_before == ()
            assert ctx.sentences_after == ("s3",)
            break
    else:
        pytest.fail("suffix side never chosen in 50 draws")


def test_truncate_side_lengths_count_the_mask():
    # Prefix mode spans positions 1..k (mask included), suffix mode k..n.
    for n in (3, 4, 5, 6, 7):
        d = synth_discourse("t", n, random.Random(n))
        for k in range(2, n):
            for seed in range(6):
                ctx = truncate_context(d, k, random.Random(seed))
                if ctx.side_kept == SIDE_PREFIX:
                    assert len(ctx.sentences_before) + 1 == k
                else:
                    assert len(ctx.sentences_after) + 1 == n - k + 1
                assert ctx.mask_index == k


def test_truncate_rejects_boundary_indices():
    d = synth_discourse("t", 4, random.Random(0))
    with pytest.raises(InvalidInput):
        truncate_context(d, 1, random.Random(0))
    with pytest.raises(InvalidInput):
        truncate_context(d, 4, random.Random(0))


# --- substitute generation --------------------------------------------------


def _ctx():
    return MaskedContext(("The story begins here.",), (), SIDE_PREFIX, 2)


def test_echo_generator_returns_fixed_sentence():
    sentence = generate_substitute(_ctx(), EchoGenerator("A fixed line."))
    assert sentence == "A fixed line."


def test_empty_generation_raises():
    with pytest.raises(EmptyGeneration):
        generate_substitute(_ctx(), EchoGenerator("   "))


def test_generator_retries_then_succeeds():
    attempts = []

    class Flaky(GeneratorBackend):
        identity = "flaky"

        def generate(self, context):
            attempts.append(1)
            if len(attempts) < 3:
                raise ConnectionError("transient")
            return "Recovered fine."

    sentence = generate_substitute(_ctx(), Flaky(), retries=2, backoff=0.0)
    assert sentence == "Recovered fine."
    assert len(attempts) == 3


def test_generator_fails_after_bounded_retries():
    attempts = []

    class Down(GeneratorBackend):
        identity = "down"

        def generate(self, context):
            attempts.append(1)
            raise ConnectionError("refused")

    with pytest.raises(BackendError):
        generate_substitute(_ctx(), Down(), retries=2, backoff=0.0)
    assert len(attempts) == 3


def test_generation_audit_record():
    audit = []
    generate_substitute(_ctx(), EchoGenerator("Audited line."), audit=audit, origin_id="src-1")
    assert len(audit) == 1
    record = audit[0].to_record()
    assert record["substitute"] == "Audited line."
    assert record["side_kept"] == SIDE_PREFIX
    assert record["origin_id"] == "src-1"
    assert re.fullmatch(r"[0-9a-f]{64}", record["context_hash"])


# --- coherence filter -------------------------------------------------------


def _candidates_with_scores(values):
    pairs = []
    table = {}
    for i, value in enumerate(values):
        pos = synth_discourse(f"c{i}", 3, random.Random(i))
        neg = pos.replace_sentence(1, f"Replacement line {i} appears.")
        pairs.append(
            CandidatePair(
                positive=pos, negative=neg, substitute=neg.sentences[1],
                filter_score=None, strategy="generative",
            )
        )
        table[neg.sentences] = value
    scorer = CallableBackend(lambda d: table[d.sentences], identity="table")
    return pairs, scorer


def test_filter_keeps_at_or_above_threshold():
    pairs, scorer = _candidates_with_scores([0.3, 0.5, 0.7])
    kept = coherence_filter(pairs, scorer, 0.5)
    assert [p.filter_score for p in kept] == [0.5, 0.7]


def test_filter_threshold_zero_keeps_all():
    pairs, scorer = _candidates_with_scores([0.0, 0.2, 0.9])
    assert len(coherence_filter(pairs, scorer, 0.0)) == 3


def test_filter_records_scores_on_kept_pairs():
    pairs, scorer = _candidates_with_scores([0.6])
    kept = coherence_filter(pairs, scorer, 0.5)
    assert kept[0].filter_score == 0.6
    assert pairs[0].filter_score is None  # input pairs stay untouched


def test_filter_monotone_nested():
    values = [random.Random(4).random() for _ in range(60)]
    pairs, scorer = _candidates_with_scores(values)
    deltas = [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0 + 1e-9]
    previous = None
    for delta in deltas:
        kept = {p.positive.origin_id for p in coherence_filter(pairs, scorer, delta)}
        if previous is not None:
            assert kept <= previous
        previous = kept


def test_filter_drops_unscoreable_pairs(caplog):
    pairs, _ = _candidates_with_scores([0.9, 0.9])

    def sometimes(d):
        if d.sentences == pairs[0].negative.sentences:
            raise RuntimeError("no score")
        return 0.9

    with caplog.at_level(logging.WARNING):
        kept = coherence_filter(pairs, CallableBackend(sometimes), 0.5)
    assert len(kept) == 1
    assert "dropping" in caplog.text


def test_filter_on_score_callback_sees_everything():
    pairs, scorer = _candidates_with_scores([0.2, 0.8])
    seen = []
    coherence_filter(pairs, scorer, 0.5, on_score=lambda i, p, s: seen.append((i, s)))
    assert seen == [(0, 0.2), (1, 0.8)]


# --- rule-based substitute --------------------------------------------------


def test_rule_substitute_spec_bigram_example():
    d = make_d("Intro line one.", "the red fox ran", "Outro line three.", origin="target")
    pool = [
        make_d("the red fox slept", "a blue bird sang", origin="other"),
    ]
    assert rule_based_substitute(d, 2, pool) == "the red fox slept"


def test_rule_substitute_pool_of_one():
    d = make_d("Opening here.", "the masked middle", "Closing there.", origin="t")
    pool = [make_d("sole candidate sentence", origin="o")]
    assert rule_based_substitute(d, 2, pool) == "sole candidate sentence"


def test_rule_substitute_all_zero_overlap_takes_first():
    d = make_d("Opening here.", "zebra quartz violin", "Closing there.", origin="t")
    pool = [make_d("apple banana", "cherry date", origin="o1"), make_d("elder fig", origin="o2")]
    assert rule_based_substitute(d, 2, pool) == "apple banana"


def test_rule_substitute_rejects_own_origin_in_pool():
    d = make_d("One here.", "two middle", "three end.", origin="same")
    with pytest.raises(InvalidInput):
        rule_based_substitute(d, 2, [make_d("other text", origin="same")])


def test_rule_substitute_empty_pool():
    d = make_d("One here.", "two middle", "three end.", origin="t")
    with pytest.raises(InvalidInput):
        rule_based_substitute(d, 2, [])


def _oracle_best_overlap(target: str, pool_sentences, order: int):
    def grams(s):
        tokens = re.findall(r"[a-z0-9']+", s.lower())
        return {tuple(tokens[i : i + order]) for i in range(max(0, len(tokens) - order + 1))}

    target_grams = grams(target)
    best, best_count = None, -1
    for sentence in pool_sentences:
        count = len(target_grams & grams(sentence))
        if count > best_count:
            best, best_count = sentence, count
    return best


@given(seed=st.integers(0, 9_999), order=st.integers(1, 3))
@settings(max_examples=80, deadline=None)
def test_rule_substitute_matches_exhaustive_oracle(seed, order):
    rng = random.Random(seed)
    words = ["tide", "rose", "fell", "dusk", "dawn", "pier", "gull", "net", "boat", "rope"]
    def sentence():
        return " ".join(rng.choice(words) for _ in range(rng.randint(1, 8)))

    d = Discourse(
        ("Opening sentence anchors.", sentence(), "Closing sentence anchors."),
        origin_id="target",
    )
    pool = [
        Discourse(tuple(sentence() for _ in range(rng.randint(1, 4))), origin_id=f"pool-{i}")
        for i in range(rng.randint(1, 6))
    ]
    flat = [s for p in pool for s in p.sentences]
    got = rule_based_substitute(d, 2, pool, ngram_order=order)
    assert got == _oracle_best_overlap(d.sentences[1], flat, order)


# --- build_dataset ----------------------------------------------------------


def test_build_counting_identity(sources40):
    result = build_dataset(
        AugmentationConfig(seed=1, global_fraction=0.25, filter_threshold=0.0),
        sources40,
        generator=EchoGenerator(),
        filter_scorer=HeuristicBackend(),
    )
    counts = result.report.counts
    assert counts["total"] == 2 * (counts["n_neg_global"] + counts["n_local_kept"])
    assert counts["total"] == len(result.samples)


def test_build_two_sentence_sources_go_global(sources12):
    result = build_dataset(
        AugmentationConfig(seed=2, global_fraction=0.25, filter_threshold=0.0),
        sources12,
        generator=EchoGenerator(),
        filter_scorer=HeuristicBackend(),
    )
    two_sentence_ids = {d.origin_id for d in sources12 if len(d) == 2}
    for sample in result.samples:
        origin = sample.pair_id.split("#")[0]
        if origin in two_sentence_ids:
            assert "#global" in sample.pair_id


def test_build_every_negative_differs_from_positive(sources40):
    result = build_dataset(
        AugmentationConfig(seed=3, filter_threshold=0.0),
        sources40,
        generator=EchoGenerator(),
        filter_scorer=HeuristicBackend(),
    )
    by_pair = {}
    for sample in result.samples:
        by_pair.setdefault(sample.pair_id, {})[sample.label] = sample.discourse
    assert by_pair
    for members in by_pair.values():
        assert set(members) == {"coherent", "incoherent"}
        assert members["coherent"].sentences != members["incoherent"].sentences


def test_build_provenance_labels(sources40):
    generative = build_dataset(
        AugmentationConfig(seed=4, filter_threshold=0.0),
        sources40,
        generator=EchoGenerator(),
        filter_scorer=HeuristicBackend(),
    )
    provs = {s.provenance for s in generative.samples}
    assert provs == {"original", "global_shuffle", "local_generative"}

    rule = build_dataset(
        AugmentationConfig(seed=4, filter_threshold=0.0),
        sources40,
        local_strategy="rule",
    )
    provs = {s.provenance for s in rule.samples}
    assert provs == {"original", "global_shuffle", "local_rule"}


def test_build_deterministic_across_worker_counts(sources40):
    config = AugmentationConfig(seed=5, filter_threshold=0.0)
    serial = build_dataset(
        config, sources40, generator=EchoGenerator(), filter_scorer=HeuristicBackend(), workers=1
    )
    parallel = build_dataset(
        config, sources40, generator=EchoGenerator(), filter_scorer=HeuristicBackend(), workers=8
    )
    assert serial.samples == parallel.samples


def test_build_insufficient_sources():
    only_short = [Discourse(("Single sentence.",), origin_id="solo")]
    with pytest.raises(InsufficientData):
        build_dataset(AugmentationConfig(), only_short, generator=EchoGenerator())


def test_build_zero_survivors_warns(sources40, caplog):
    # An impossible threshold for the echo substitute: the heuristic scores
    # the corrupted middle near zero overlap, so nothing passes at 1.0.
    config = AugmentationConfig(seed=6, filter_threshold=1.0, global_fraction=0.25)
    with caplog.at_level(logging.WARNING):
        result = build_dataset(
            config, sources40, generator=EchoGenerator(), filter_scorer=HeuristicBackend()
        )
    counts = result.report.counts
    assert counts["n_local_kept"] == 0
    assert counts["total"] == 2 * counts["n_neg_global"]
    assert "survived" in caplog.text


def test_build_global_fraction_zero_skips_two_sentence_sources(sources12, caplog):
    with caplog.at_level(logging.WARNING):
        result = build_dataset(
            AugmentationConfig(seed=7, global_fraction=0.0, filter_threshold=0.0),
            sources12,
            generator=EchoGenerator(),
            filter_scorer=HeuristicBackend(),
        )
    assert result.report.counts["n_neg_global"] == 0
    assert "global augmentation disabled" in caplog.text


def test_build_report_records_identities(sources12):
    result = build_dataset(
        AugmentationConfig(seed=8, filter_threshold=0.0),
        sources12,
        generator=EchoGenerator(),
        filter_scorer=HeuristicBackend(),
    )
    record = result.report.to_record()
    assert record["generator_identity"] == "echo"
    assert record["filter_identity"] == "heuristic"
    assert record["seed"] == 8
    assert record["config"]["filter_threshold"] == 0.0
    assert "version" in record


def test_build_exchanges_cover_generated_candidates(sources40):
    result = build_dataset(
        AugmentationConfig(seed=9, filter_threshold=0.0),
        sources40,
        generator=EchoGenerator(),
        filter_scorer=HeuristicBackend(),
    )
    assert len(result.exchanges) == result.report.counts["n_local_candidates"]
    for exchange in result.exchanges:
        assert exchange.filter_score is not None


def test_build_unknown_strategy():
    with pytest.raises(InvalidInput):
        build_dataset(AugmentationConfig(), synth_sources(4), local_strategy="entity_grid")


def test_build_generation_failures_degrade_gracefully(sources40):
    class MostlyDown(GeneratorBackend):
        identity = "mostly-down"

        def generate(self, context):
            if context.mask_index % 2 == 0:
                raise ConnectionError("refused")
            return "A stand-in sentence appears."

    result = build_dataset(
        AugmentationConfig(seed=10, filter_threshold=0.0),
        sources40,
        generator=MostlyDown(),
        filter_scorer=ConstantBackend(1.0),
    )
    counts = result.report.counts
    assert counts["n_local_failed"] > 0
    assert counts["total"] == 2 * (counts["n_neg_global"] + counts["n_local_kept"])
