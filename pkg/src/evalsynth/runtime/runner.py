"""Execute an eval plan over examples and aggregate the outcomes."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

from ..descriptor import StrategyTemplate
from ..errors import EvalSynthError, ModalityMismatch, StalePlan
from ..fm import FMClient
from ..records import ExampleRecord
from ..synthesis import EvalInstance, EvalPlan
from ..tables import DataTable
from .charts import regenerate_chart
from .checks import Violation, check_constraints
from .compare import ErrorReport, Tolerance, compare_tables
from .judge import compute_qa_metrics, judge_with_rubric
from .spans import DEFAULT_NGRAM, Span, highlight_spans, normalize_words, passage_support


class RunVerdict(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    NEEDS_REVIEW = "needs_review"


@dataclass(frozen=True)
class Artifact:
    name: str
    media_type: str
    data: bytes = b""
    ref: str = ""

    @property
    def content_ref(self) -> str:
        return self.ref or hashlib.sha256(self.data).hexdigest()


@dataclass(frozen=True)
class EvalOutput:
    score: float | None = None
    metrics: tuple[tuple[str, float], ...] = ()
    stats: tuple[tuple[str, float], ...] = ()
    artifacts: tuple[Artifact, ...] = ()
    report: ErrorReport | None = None
    spans: tuple[Span, ...] = ()
    support_ranking: tuple[tuple[int, int], ...] = ()
    violations: tuple[Violation, ...] = ()
    rationale: str = ""
    error: str = ""
    skipped_missing_reference: bool = False

    def metric(self, name: str) -> float | None:
        for k, v in self.metrics:
            if k == name:
                return v
        return None


@dataclass(frozen=True)
class EvalResult:
    example_id: str
    plan_id: str
    plan_version: int
    outputs: tuple[tuple[str, EvalOutput], ...]
    verdict: RunVerdict

    def output(self, eval_id: str) -> EvalOutput | None:
        for k, v in self.outputs:
            if k == eval_id:
                return v
        return None


def run_plan(
    plan: EvalPlan,
    example: ExampleRecord,
    fm: FMClient,
    current_version: int | None = None,
) -> EvalResult:
    """Run every eval instance in the plan against one example.

    The verdict is ``fail`` on any constraint violation, any score or metric
    below its threshold, or any instance error; ``needs_review`` when a
    reference-requiring eval had no reference data; ``pass`` otherwise.
    """
    if current_version is not None and plan.version != current_version:
        raise StalePlan(f"plan version {plan.version} is not current (expected {current_version})")
    declared = plan.descriptor_snapshot.io_spec.input_modalities
    undeclared = example.input_modalities - declared
    if undeclared:
        raise ModalityMismatch(
            f"example {example.example_id} has input modalities "
            f"{sorted(m.value for m in undeclared)} not declared by the task"
        )

    outputs: list[tuple[str, EvalOutput]] = []
    for inst in plan.evals:
        if inst.requires_reference and example.reference_table is None:
            outputs.append((inst.eval_id, EvalOutput(skipped_missing_reference=True)))
            continue
        try:
            outputs.append((inst.eval_id, _run_instance(plan, inst, example, fm)))
        except EvalSynthError as exc:
            outputs.append((inst.eval_id, EvalOutput(error=f"{exc.code}: {exc}")))

    return EvalResult(
        example_id=example.example_id,
        plan_id=plan.plan_id,
        plan_version=plan.version,
        outputs=tuple(outputs),
        verdict=_verdict(plan, outputs),
    )


def _run_instance(plan: EvalPlan, inst: EvalInstance, example: ExampleRecord, fm: FMClient) -> EvalOutput:
    template = inst.template_id
    if template is StrategyTemplate.CHART_REGENERATION:
        return _run_chart_regeneration(example)
    if template is StrategyTemplate.TABLE_DIFF:
        return _run_table_diff(inst, example)
    if template is StrategyTemplate.SPAN_HIGHLIGHTING:
        return _run_span_highlighting(inst, example)
    if template is StrategyTemplate.QA_METRICS:
        return _run_qa_metrics(inst, example, fm)
    if template is StrategyTemplate.RUBRIC_JUDGE:
        return _run_rubric_judge(plan, example, fm)
    if template is StrategyTemplate.CONSTRAINT_CHECKS:
        return _run_constraint_checks(plan, example)
    return _run_basic_stats(example)


def _extracted_table(example: ExampleRecord) -> DataTable:
    table = example.fm_output.table
    if table is None:
        raise ModalityMismatch(f"example {example.example_id} has no output table")
    return table


def _run_chart_regeneration(example: ExampleRecord) -> EvalOutput:
    svg = regenerate_chart(_extracted_table(example))
    return EvalOutput(
        artifacts=(Artifact(name="regenerated_chart", media_type="image/svg+xml", data=svg),)
    )


def _run_table_diff(inst: EvalInstance, example: ExampleRecord) -> EvalOutput:
    extracted = _extracted_table(example)
    reference = example.reference_table
    tol = Tolerance(x_rel=float(inst.param("x_rel", 0.02)), y_rel=float(inst.param("y_rel", 0.02)))
    report = compare_tables(extracted, reference, tol)
    denominator = max(1, reference.n_rows + len(report.spurious))
    return EvalOutput(score=report.correct / denominator, report=report)


def _run_span_highlighting(inst: EvalInstance, example: ExampleRecord) -> EvalOutput:
    passages = example.passages
    answer = example.fm_output.text
    ngram = int(inst.param("ngram", DEFAULT_NGRAM))
    spans = highlight_spans(answer, passages, ngram)
    ranking = passage_support(spans, passages) if passages else []
    return EvalOutput(spans=tuple(spans), support_ranking=tuple(ranking))


def _run_qa_metrics(inst: EvalInstance, example: ExampleRecord, fm: FMClient) -> EvalOutput:
    ngram = int(inst.param("ngram", DEFAULT_NGRAM))
    metrics = compute_qa_metrics(example.question, example.fm_output.text, example.passages, fm, ngram)
    ordered = tuple(sorted(metrics.items()))
    score = sum(metrics.values()) / len(metrics)
    return EvalOutput(score=score, metrics=ordered)


def _run_rubric_judge(plan: EvalPlan, example: ExampleRecord, fm: FMClient) -> EvalOutput:
    descriptor = plan.descriptor_snapshot
    rubric = tuple(
        o.description or o.name for o in descriptor.objectives
    ) or ("The output fulfils the task description.",)
    context = "\n\n".join(example.passages) or example.question or descriptor.description
    result = judge_with_rubric(example.fm_output.text, context, rubric, fm)
    return EvalOutput(score=result.score, rationale=result.rationale)


def _run_constraint_checks(plan: EvalPlan, example: ExampleRecord) -> EvalOutput:
    output = example.fm_output.table if example.fm_output.table is not None else example.fm_output.text
    violations = check_constraints(output, plan.descriptor_snapshot.constraints)
    return EvalOutput(violations=tuple(violations))


def _run_basic_stats(example: ExampleRecord) -> EvalOutput:
    stats: list[tuple[str, float]] = []
    table = example.fm_output.table
    if table is not None:
        stats.append(("rows", float(table.n_rows)))
        stats.append(("columns", float(len(table.columns))))
    if example.fm_output.text:
        stats.append(("words", float(len(normalize_words(example.fm_output.text)))))
        stats.append(("characters", float(len(example.fm_output.text))))
    return EvalOutput(stats=tuple(sorted(stats)))


def _verdict(plan: EvalPlan, outputs: list[tuple[str, EvalOutput]]) -> RunVerdict:
    needs_review = False
    for eval_id, out in outputs:
        if out.error or out.violations:
            return RunVerdict.FAIL
        inst = plan.eval_instance(eval_id)
        threshold = inst.param("threshold") if inst is not None else None
        if threshold is not None:
            scores = [out.score] if out.score is not None else []
            scores.extend(v for _, v in out.metrics)
            if any(s < float(threshold) for s in scores):
                return RunVerdict.FAIL
        if out.skipped_missing_reference:
            needs_review = True
    return RunVerdict.NEEDS_REVIEW if needs_review else RunVerdict.PASS


@dataclass(frozen=True)
class Summary:
    n: int
    pass_rate: float
    verdict_counts: tuple[tuple[str, int], ...]
    metric_means: tuple[tuple[str, float], ...]
    error_totals: tuple[tuple[str, int], ...]
    empty: bool = False

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "pass_rate": self.pass_rate,
            "verdicts": dict(self.verdict_counts),
            "metric_means": dict(self.metric_means),
            "error_totals": dict(self.error_totals),
            "empty": self.empty,
        }


def summarize_results(results: list[EvalResult]) -> Summary:
    n = len(results)
    if n == 0:
        return Summary(
            n=0,
            pass_rate=0.0,
            verdict_counts=(),
            metric_means=(),
            error_totals=(("incorrect", 0), ("missing", 0), ("spurious", 0)),
            empty=True,
        )
    verdicts: dict[str, int] = {}
    metric_sums: dict[str, list[float]] = {}
    errors = {"incorrect": 0, "missing": 0, "spurious": 0}
    passes = 0
    for r in results:
        verdicts[r.verdict.value] = verdicts.get(r.verdict.value, 0) + 1
        if r.verdict is RunVerdict.PASS:
            passes += 1
        for _, out in r.outputs:
            for name, value in out.metrics:
                metric_sums.setdefault(name, []).append(value)
            if out.report is not None:
                for cls, count in out.report.counts.items():
                    errors[cls] += count
    means = tuple(sorted((name, sum(vs) / len(vs)) for name, vs in metric_sums.items()))
    return Summary(
        n=n,
        pass_rate=passes / n,
        verdict_counts=tuple(sorted(verdicts.items())),
        metric_means=means,
        error_totals=tuple(sorted(errors.items())),
    )
