"""Word-level span highlighting: which source passages support an answer.

All matching happens on normalized tokens (casefolded, punctuation stripped,
whitespace split); span indices refer to positions in that normalized
sequence. Every n-word window of the answer is searched verbatim in every
passage and the hits are merged into maximal non-overlapping spans.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

from ..errors import SpanOutOfRange

DEFAULT_NGRAM = 5

_PUNCT = string.punctuation + "‘’“”–—"

# Small frozen stopword list; "content words" are everything else.
STOPWORDS = frozenset(
    """a an the is are was were be been being of to in on at and or for with as
    by it its this that these those from not no but if then than so such do
    does did done has have had having will would can could should may might
    about into over under between each per what which who whom whose when
    where why how""".split()
)


def normalize_words(text: str) -> list[str]:
    words = []
    for token in text.split():
        cleaned = token.casefold().strip(_PUNCT)
        if cleaned:
            words.append(cleaned)
    return words


def content_word_indices(words: list[str]) -> list[int]:
    return [i for i, w in enumerate(words) if w not in STOPWORDS]


def content_words(text: str) -> set[str]:
    return {w for w in normalize_words(text) if w not in STOPWORDS}


@dataclass(frozen=True)
class Span:
    passage_index: int
    start_word: int
    end_word: int  # inclusive

    @property
    def width(self) -> int:
        return self.end_word - self.start_word + 1


def merge_marks(marks: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Merge overlapping or adjacent inclusive intervals."""
    if not marks:
        return []
    marks = sorted(marks)
    merged = [marks[0]]
    for start, end in marks[1:]:
        last_start, last_end = merged[-1]
        if start <= last_end + 1:
            merged[-1] = (last_start, max(last_end, end))
        else:
            merged.append((start, end))
    return merged


def answer_coverage(
    answer: str, passages: list[str], ngram: int = DEFAULT_NGRAM
) -> tuple[set[int], list[Span]]:
    """Match every n-word window of the answer against every passage.

    Returns the set of answer word indices that belong to at least one matched
    window, plus the merged passage spans. Answers shorter than ``ngram``
    words are matched as a single whole-answer window.
    """
    answer_words = normalize_words(answer)
    if not answer_words or not passages:
        return set(), []
    n = min(ngram, len(answer_words))

    windows = [tuple(answer_words[i : i + n]) for i in range(len(answer_words) - n + 1)]

    covered: set[int] = set()
    spans: list[Span] = []
    for p_idx, passage in enumerate(passages):
        p_words = normalize_words(passage)
        if len(p_words) < n:
            continue
        index: dict[tuple[str, ...], list[int]] = {}
        for i in range(len(p_words) - n + 1):
            index.setdefault(tuple(p_words[i : i + n]), []).append(i)
        marks: list[tuple[int, int]] = []
        for w_idx, window in enumerate(windows):
            positions = index.get(window)
            if not positions:
                continue
            covered.update(range(w_idx, w_idx + n))
            for pos in positions:
                marks.append((pos, pos + n - 1))
        for start, end in merge_marks(marks):
            spans.append(Span(passage_index=p_idx, start_word=start, end_word=end))
    return covered, spans


def highlight_spans(answer: str, passages: list[str], ngram: int = DEFAULT_NGRAM) -> list[Span]:
    """Source spans whose words verbatim-support the answer's n-grams."""
    _, spans = answer_coverage(answer, passages, ngram)
    return spans


def passage_support(spans: list[Span], passages: list[str]) -> list[tuple[int, int]]:
    """Per-passage highlighted word counts, ranked descending.

    Ties break toward the lower passage index; passages without spans appear
    with a zero count so the ranking is total.
    """
    word_counts = [len(normalize_words(p)) for p in passages]
    marks: dict[int, list[tuple[int, int]]] = {}
    for span in spans:
        if not (0 <= span.passage_index < len(passages)):
            raise SpanOutOfRange(f"passage index {span.passage_index} out of range")
        if span.start_word < 0 or span.end_word < span.start_word:
            raise SpanOutOfRange(f"bad span bounds ({span.start_word}, {span.end_word})")
        if span.end_word >= word_counts[span.passage_index]:
            raise SpanOutOfRange(
                f"span ends at word {span.end_word} but passage {span.passage_index} "
                f"has {word_counts[span.passage_index]} words"
            )
        marks.setdefault(span.passage_index, []).append((span.start_word, span.end_word))

    counts = []
    for p_idx in range(len(passages)):
        merged = merge_marks(marks.get(p_idx, []))
        counts.append((p_idx, sum(end - start + 1 for start, end in merged)))
    return sorted(counts, key=lambda c: (-c[1], c[0]))
