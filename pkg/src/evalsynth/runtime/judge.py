"""Rubric judging and retrieval-grounded QA metrics.

Judging has two paths. With a live or replayed FM, one call scores the whole
rubric bundle through a fixed prompt that demands ``SCORE: k/5`` lines. In
stub mode the score degrades to deterministic content-word overlap so the
rest of the pipeline stays testable offline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import UnparseableJudgeOutput
from ..fm import ChatRequest, FMClient
from .spans import DEFAULT_NGRAM, answer_coverage, content_word_indices, content_words, normalize_words

JUDGE_SYSTEM = (
    "You are a strict evaluator. Score how well the answer satisfies each "
    "criterion given the context. For each criterion, in order, output exactly "
    'one line "SCORE: k/5" where k is an integer from 0 to 5, optionally '
    "followed by a short justification."
)

JUDGE_USER_TEMPLATE = """Criteria:
{criteria}

Context:
{context}

Answer:
{answer}

For each criterion in order, output exactly one line "SCORE: k/5"."""

RELEVANCY_RUBRIC = ("The answer directly and completely addresses the question.",)

_SCORE_RE = re.compile(r"SCORE:\s*(\d+)\s*/\s*5", re.IGNORECASE)


@dataclass(frozen=True)
class JudgeResult:
    score: float
    rationale: str


def lexical_overlap(a: str, b: str) -> float:
    """Fraction of ``a``'s content words that also occur in ``b``."""
    a_words = content_words(a)
    if not a_words:
        return 0.0
    return len(a_words & content_words(b)) / len(a_words)


def parse_judge_scores(text: str) -> list[int]:
    found = [int(m.group(1)) for m in _SCORE_RE.finditer(text)]
    if not found:
        raise UnparseableJudgeOutput(f"no SCORE: k/5 line in judge output: {text[:120]!r}")
    return [min(5, max(0, k)) for k in found]


def judge_with_rubric(
    answer: str, context: str, rubric: tuple[str, ...] | list[str], fm: FMClient
) -> JudgeResult:
    if not rubric:
        raise ValueError("rubric must contain at least one criterion")
    if fm.mode == "stub":
        score = lexical_overlap(answer, context)
        return JudgeResult(
            score=score,
            rationale=f"stub judge: content-word overlap {score:.3f} between answer and context",
        )
    criteria = "\n".join(f"{i + 1}. {c}" for i, c in enumerate(rubric))
    req = ChatRequest(
        system=JUDGE_SYSTEM,
        user=JUDGE_USER_TEMPLATE.format(criteria=criteria, context=context, answer=answer),
    )
    response = fm.complete(req)
    scores = parse_judge_scores(response.text)
    return JudgeResult(score=sum(scores) / len(scores) / 5.0, rationale=response.text.strip())


def _clamp(v: float) -> float:
    return min(1.0, max(0.0, v))


def compute_qa_metrics(
    question: str,
    answer: str,
    passages: list[str],
    fm: FMClient,
    ngram: int = DEFAULT_NGRAM,
) -> dict[str, float]:
    """Answer relevancy plus faithfulness, both in [0, 1].

    Faithfulness is the fraction of the answer's content words covered by
    passage-supported n-gram windows; relevancy comes from the judge (lexical
    question/answer overlap in stub mode).
    """
    if not question.strip() or not answer.strip():
        raise ValueError("question and answer must be non-empty")

    covered, _ = answer_coverage(answer, passages, ngram)
    content_idx = content_word_indices(normalize_words(answer))
    if content_idx:
        faithfulness = len(covered.intersection(content_idx)) / len(content_idx)
    else:
        faithfulness = 0.0

    if fm.mode == "stub":
        relevancy = lexical_overlap(question, answer)
    else:
        context = question if not passages else question + "\n\n" + "\n\n".join(passages)
        relevancy = judge_with_rubric(answer, context, RELEVANCY_RUBRIC, fm).score

    return {
        "answer_relevancy": _clamp(relevancy),
        "faithfulness": _clamp(faithfulness),
    }
