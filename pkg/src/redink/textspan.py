"""Sentence segmentation with exact character offsets, and resolution of
approximately-quoted evidence text back to spans in the source essay.

Both operations are pure functions over immutable inputs: same text in,
same spans out, on every platform.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

DEFAULT_ABBREVIATIONS = ("e.g.", "i.e.", "vs.", "etc.", "Mr.", "Dr.")
DEFAULT_FUZZY_THRESHOLD = 0.6

_TERMINALS = frozenset(".!?")
_QUOTE_CHARS = "\"'“”‘’`"
_TRAILING_PUNCT = ".!?,;:"
_TOKEN_RE = re.compile(r"\w+")


class MatchQuality(str, Enum):
    """How a provider quote was localized in the essay."""

    EXACT = "exact"
    NORMALIZED = "normalized"
    FUZZY = "fuzzy"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class Sentence:
    """One sentence of an essay; ``text`` equals the essay slice [start, end)."""

    index: int
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class EvidenceSpan:
    """A resolved location in the essay backing one rubric's comment.

    ``score`` is populated only for fuzzy matches. An unresolved span has
    start == end == 0 and is treated as a document-level comment.
    """

    rubric_id: str
    start: int
    end: int
    quoted_text: str
    match_quality: MatchQuality
    score: float | None = None

    @property
    def resolved(self) -> bool:
        return self.match_quality is not MatchQuality.UNRESOLVED


def segment(text: str, abbreviations: tuple[str, ...] = DEFAULT_ABBREVIATIONS) -> list[Sentence]:
    """Split ``text`` into sentences with exact offsets.

    A sentence ends after '.', '!' or '?' when followed by end-of-text or by
    whitespace and an uppercase letter. A '.' closing a known abbreviation
    never ends a sentence. Leading/trailing whitespace is excluded from spans.
    """
    if not text:
        return []
    abbrevs = {a.lower() for a in abbreviations}
    n = len(text)
    breaks: list[int] = []
    for i, ch in enumerate(text):
        if ch not in _TERMINALS:
            continue
        if ch == ".":
            j = i
            while j > 0 and not text[j - 1].isspace():
                j -= 1
            if text[j : i + 1].lower() in abbrevs:
                continue
        k = i + 1
        while k < n and text[k].isspace():
            k += 1
        if k >= n:
            breaks.append(i + 1)
        elif k > i + 1 and text[k].isupper():
            breaks.append(i + 1)

    sentences: list[Sentence] = []
    prev = 0
    for bound in [*breaks, n]:
        if bound <= prev:
            continue
        s, e = prev, bound
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if e > s:
            sentences.append(Sentence(len(sentences), s, e, text[s:e]))
        prev = bound
    return sentences


def _tokens(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.casefold()))


def _normalize_quote(quote: str) -> str:
    """Casefold, collapse whitespace, strip wrapping quote marks and
    terminal punctuation."""
    out = re.sub(r"\s+", " ", quote.casefold()).strip()
    out = out.strip(_QUOTE_CHARS).strip()
    out = out.rstrip(_TRAILING_PUNCT).strip()
    return out


def _normalized_view(text: str) -> tuple[str, list[int]]:
    """Casefolded text with whitespace runs collapsed, plus a map from each
    normalized position back to the original character offset."""
    chars: list[str] = []
    offsets: list[int] = []
    in_space = False
    for idx, ch in enumerate(text):
        if ch.isspace():
            if not in_space:
                chars.append(" ")
                offsets.append(idx)
                in_space = True
        else:
            in_space = False
            for folded in ch.casefold():
                chars.append(folded)
                offsets.append(idx)
    return "".join(chars), offsets


def _snap(start: int, end: int, sentences: list[Sentence] | tuple[Sentence, ...]) -> tuple[int, int] | None:
    """Widen [start, end) outward to whole-sentence boundaries."""
    covering = [s for s in sentences if s.start < end and s.end > start]
    if not covering:
        return None
    return covering[0].start, covering[-1].end


def jaccard(tokens_a: set[str], tokens_b: set[str]) -> float:
    if not tokens_a and not tokens_b:
        return 0.0
    union = tokens_a | tokens_b
    if not union:
        return 0.0
    return len(tokens_a & tokens_b) / len(union)


def resolve(
    quoted_text: str,
    text: str,
    sentences: list[Sentence] | tuple[Sentence, ...],
    *,
    rubric_id: str = "",
    threshold: float = DEFAULT_FUZZY_THRESHOLD,
) -> EvidenceSpan:
    """Locate ``quoted_text`` in ``text``, trying exact, normalized, then
    fuzzy matching; spans are widened to whole sentences.

    Fuzzy matching scores token-set Jaccard similarity against every sentence
    and every window of two adjacent sentences; the best score at or above
    ``threshold`` wins, ties broken by earliest start offset. Failure is the
    unresolved variant, never an exception.
    """

    def unresolved() -> EvidenceSpan:
        return EvidenceSpan(rubric_id, 0, 0, quoted_text, MatchQuality.UNRESOLVED)

    if not quoted_text.strip() or not sentences:
        return unresolved()

    pos = text.find(quoted_text)
    if pos >= 0:
        snapped = _snap(pos, pos + len(quoted_text), sentences)
        if snapped is not None:
            return EvidenceSpan(rubric_id, snapped[0], snapped[1], quoted_text, MatchQuality.EXACT)

    norm_quote = _normalize_quote(quoted_text)
    if norm_quote:
        norm_text, offsets = _normalized_view(text)
        pos = norm_text.find(norm_quote)
        if pos >= 0:
            start = offsets[pos]
            end = offsets[pos + len(norm_quote) - 1] + 1
            snapped = _snap(start, end, sentences)
            if snapped is not None:
                return EvidenceSpan(
                    rubric_id, snapped[0], snapped[1], quoted_text, MatchQuality.NORMALIZED
                )

    quote_tokens = _tokens(quoted_text)
    if not quote_tokens:
        return unresolved()
    best: tuple[float, int, int] | None = None
    sentence_tokens = [_tokens(s.text) for s in sentences]
    candidates: list[tuple[int, int, set[str]]] = [
        (s.start, s.end, sentence_tokens[i]) for i, s in enumerate(sentences)
    ]
    for i in range(len(sentences) - 1):
        candidates.append(
            (sentences[i].start, sentences[i + 1].end, sentence_tokens[i] | sentence_tokens[i + 1])
        )
    for start, end, cand_tokens in candidates:
        score = jaccard(quote_tokens, cand_tokens)
        if best is None or score > best[0] or (score == best[0] and (start, end) < (best[1], best[2])):
            best = (score, start, end)
    if best is not None and best[0] >= threshold:
        return EvidenceSpan(rubric_id, best[1], best[2], quoted_text, MatchQuality.FUZZY, best[0])

    return unresolved()
