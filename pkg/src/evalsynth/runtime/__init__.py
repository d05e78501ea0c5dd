"""Executable eval strategies and the per-example plan runner."""

from .charts import regenerate_chart
from .checks import Violation, check_constraints
from .compare import ErrorReport, Tolerance, compare_tables
from .judge import compute_qa_metrics, judge_with_rubric
from .runner import EvalOutput, EvalResult, RunVerdict, Summary, run_plan, summarize_results
from .spans import Span, highlight_spans, passage_support

__all__ = [
    "ErrorReport",
    "EvalOutput",
    "EvalResult",
    "RunVerdict",
    "Span",
    "Summary",
    "Tolerance",
    "Violation",
    "check_constraints",
    "compare_tables",
    "compute_qa_metrics",
    "highlight_spans",
    "judge_with_rubric",
    "passage_support",
    "regenerate_chart",
    "run_plan",
    "summarize_results",
]
