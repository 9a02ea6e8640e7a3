"""Segmentation and quote-resolution behavior, pinned by hand-computed
offsets and an independent Jaccard oracle."""

from __future__ import annotations

import random
import re

from hypothesis import given, settings
from hypothesis import strategies as st

from redink.textspan import (
    DEFAULT_FUZZY_THRESHOLD,
    EvidenceSpan,
    MatchQuality,
    Sentence,
    resolve,
    segment,
)

WORDS = [
    "alpha", "bravo", "carbon", "delta", "ember", "falcon", "garnet", "harbor",
    "indigo", "jasper", "kestrel", "lumen", "meadow", "nectar", "onyx", "pollen",
    "quartz", "russet", "saffron", "tundra", "umber", "velvet", "willow", "xenon",
    "yarrow", "zephyr",
]


def hand_jaccard(quote: str, candidate: str) -> float:
    """Independent oracle: token-set Jaccard with its own tokenizer."""
    a = set(re.findall(r"[A-Za-z0-9_]+", quote.lower()))
    b = set(re.findall(r"[A-Za-z0-9_]+", candidate.lower()))
    if not (a | b):
        return 0.0
    return len(a & b) / len(a | b)


def random_essay(rng: random.Random, n_sentences: int | None = None) -> str:
    """Sentences of unique words, capitalized starts, joined by one space."""
    n_sentences = n_sentences or rng.randint(2, 6)
    sentences = []
    for _ in range(n_sentences):
        words = rng.sample(WORDS, rng.randint(4, 8))
        words[0] = words[0].capitalize()
        sentences.append(" ".join(words) + rng.choice([".", "!", "?"]))
    return " ".join(sentences)


# -- segmentation -------------------------------------------------------------


def test_segment_empty():
    assert segment("") == []
    assert segment("   \n\t ") == []


def test_segment_two_sentences_exact_offsets():
    text = "Price rises. Demand falls."
    got = segment(text)
    assert got == [
        Sentence(0, 0, 12, "Price rises."),
        Sentence(1, 13, 26, "Demand falls."),
    ]


def test_segment_abbreviation_suppresses_split():
    text = "This is rival, e.g. tuna. It is finite."
    got = segment(text)
    assert len(got) == 2
    assert got[0].text == "This is rival, e.g. tuna."
    assert got[1].text == "It is finite."


def test_segment_abbreviation_before_uppercase():
    text = "Ask Dr. Smith about it. He knows."
    got = segment(text)
    assert [s.text for s in got] == ["Ask Dr. Smith about it.", "He knows."]


def test_segment_no_split_before_lowercase():
    text = "The U.S. economy grew. it was modest."
    got = segment(text)
    # lowercase follow-up never opens a new sentence
    assert len(got) == 1


def test_segment_question_and_exclamation():
    text = "Why does price rise? Demand grew! Supply lagged."
    assert [s.text for s in segment(text)] == [
        "Why does price rise?",
        "Demand grew!",
        "Supply lagged.",
    ]


def test_segment_trailing_text_without_terminal():
    got = segment("One sentence. then a trailing fragment")
    assert [s.text for s in got] == ["One sentence. then a trailing fragment"]
    got = segment("One sentence. Then a fragment")
    assert [s.text for s in got] == ["One sentence.", "Then a fragment"]


def assert_segment_invariants(text: str):
    sentences = segment(text)
    for i, s in enumerate(sentences):
        assert s.index == i
        assert text[s.start : s.end] == s.text
        assert s.start < s.end
        if i:
            assert s.start >= sentences[i - 1].end
    return sentences


def test_segment_invariants_on_random_corpus():
    rng = random.Random(20240917)
    for _ in range(300):
        n = rng.randint(1, 8)
        text = random_essay(rng, n)
        sentences = assert_segment_invariants(text)
        assert len(sentences) == n  # joined sentences are recovered exactly
        assert segment(text) == sentences  # pure function


@given(st.text(max_size=200))
@settings(max_examples=200)
def test_segment_invariants_hold_on_arbitrary_text(text):
    assert_segment_invariants(text)


# -- resolution ---------------------------------------------------------------


def test_resolve_identity_sentence_is_exact():
    text = "Price rises. Demand falls."
    sentences = segment(text)
    span = resolve("Demand falls.", text, sentences)
    assert span.match_quality is MatchQuality.EXACT
    assert (span.start, span.end) == (13, 26)
    assert span.score is None


def test_resolve_mid_sentence_match_snaps_to_sentence():
    text = "Price rises. Demand falls."
    sentences = segment(text)
    span = resolve("Demand", text, sentences)
    assert span.match_quality is MatchQuality.EXACT
    assert (span.start, span.end) == (13, 26)


def test_resolve_spanning_two_sentences_snaps_outward():
    text = "Price rises. Demand falls."
    sentences = segment(text)
    span = resolve("rises. Demand", text, sentences)
    assert span.match_quality is MatchQuality.EXACT
    assert (span.start, span.end) == (0, 26)


def test_resolve_normalized_case_and_whitespace():
    text = "Price rises. Demand falls."
    sentences = segment(text)
    span = resolve("  demand FALLS.", text, sentences)
    assert span.match_quality is MatchQuality.NORMALIZED
    assert (span.start, span.end) == (13, 26)


def test_resolve_normalized_strips_wrapping_quotes_and_punct():
    text = "Price rises. Demand falls."
    sentences = segment(text)
    span = resolve('"Demand  falls"', text, sentences)
    assert span.match_quality is MatchQuality.NORMALIZED
    assert (span.start, span.end) == (13, 26)


def test_resolve_fuzzy_matches_hand_jaccard_oracle():
    # Oracle, computed by hand before the matcher was written:
    # quote tokens  {tuna, is, a, rival, finite, resource}          (6)
    # sent tokens   {tuna, as, a, finite, resource, is, rival}      (7)
    # intersection 6, union 7 -> 6/7
    text = "Tuna, as a finite resource, is rival."
    sentences = segment(text)
    quote = "tuna is a rival finite resource"
    span = resolve(quote, text, sentences)
    assert span.match_quality is MatchQuality.FUZZY
    assert span.score is not None
    assert abs(span.score - 6 / 7) < 1e-9
    assert abs(span.score - hand_jaccard(quote, text)) < 1e-9
    assert (span.start, span.end) == (0, len(text))


def test_resolve_below_threshold_is_unresolved():
    text = "Tuna, as a finite resource, is rival."
    sentences = segment(text)
    span = resolve("completely unrelated words here about zebras", text, sentences)
    assert span.match_quality is MatchQuality.UNRESOLVED
    assert (span.start, span.end) == (0, 0)


def test_resolve_empty_inputs_are_unresolved():
    text = "Price rises."
    sentences = segment(text)
    assert resolve("", text, sentences).match_quality is MatchQuality.UNRESOLVED
    assert resolve("   ", text, sentences).match_quality is MatchQuality.UNRESOLVED
    assert resolve("anything", "", []).match_quality is MatchQuality.UNRESOLVED


def test_resolve_fuzzy_two_sentence_window():
    text = "Alpha bravo carbon delta. Ember falcon garnet harbor."
    sentences = segment(text)
    # Tokens drawn evenly from both sentences: neither single sentence clears
    # the threshold, the two-sentence window does.
    quote = "alpha bravo carbon ember falcon garnet"
    span = resolve(quote, text, sentences)
    assert span.match_quality is MatchQuality.FUZZY
    assert (span.start, span.end) == (0, len(text))
    assert abs(span.score - hand_jaccard(quote, text)) < 1e-9


def test_resolve_tie_breaks_to_earliest_start():
    text = "Alpha bravo carbon. Delta ember falcon. Alpha bravo carbon."
    sentences = segment(text)
    # Not a substring (word dropped from the middle is absent): fuzzy path.
    span = resolve("alpha carbon", text, sentences)
    assert span.match_quality is MatchQuality.FUZZY
    assert span.start == 0  # first of the two identical sentences


def test_resolve_every_sentence_boundary_substring_is_exact():
    rng = random.Random(7)
    for _ in range(25):
        text = random_essay(rng)
        sentences = segment(text)
        for i in range(len(sentences)):
            for j in range(i, len(sentences)):
                fragment = text[sentences[i].start : sentences[j].end]
                span = resolve(fragment, text, sentences)
                assert span.match_quality is MatchQuality.EXACT
                assert (span.start, span.end) == (sentences[i].start, sentences[j].end)


def test_resolve_fuzzy_score_respects_threshold_contract():
    rng = random.Random(99)
    for _ in range(50):
        text = random_essay(rng, 4)
        sentences = segment(text)
        words = rng.sample(WORDS, 5)
        span = resolve(" ".join(words), text, sentences)
        if span.match_quality is MatchQuality.FUZZY:
            assert span.score is not None and span.score >= DEFAULT_FUZZY_THRESHOLD
            covered = text[span.start : span.end]
            assert abs(hand_jaccard(" ".join(words), covered) - span.score) < 1e-9


def test_evidence_span_resolved_property():
    span = EvidenceSpan("r1", 0, 0, "x", MatchQuality.UNRESOLVED)
    assert not span.resolved
    span = EvidenceSpan("r1", 0, 3, "x", MatchQuality.EXACT)
    assert span.resolved
