"""Scoring planner output against gold labels.

Definitions used throughout:

* A prediction is *correct* iff its canonical tool sequence equals the gold
  plan's exactly (variant names are normalized first, so a variant spelling
  is never an error; a different order always is).
* Every prediction is assigned a *class*: the ``class_label`` of its first
  evidence-producing tool (the first step that is not the no-evidence tool),
  the no-evidence class when no step produces evidence, and ``"invalid"``
  when the prediction failed to parse or names an unknown tool.
* The confusion matrix counts (gold class, predicted class) pairs; per-class
  precision/recall/F1 derive from it, so recomputing them from the emitted
  matrix reproduces the report exactly.
* ``tool_accuracy`` is the overall correct fraction under the sequence-exact
  rule above.
* Argument accuracy is restricted to gold plans that use the tools whose
  arguments are query rewrites rather than the query itself
  (``prod_search`` and ``shipment_status`` in the shipped registry); values
  are compared after whitespace trimming and case folding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .errors import ReaperError, UnknownToolError
from .executor import Retriever, StepStatus, execute_plan
from .plan import Literal, Plan, PlanParseError, parse_plan, render_value
from .prompt import QueryInput
from .registry import NO_RETRIEVAL_TOOL, ToolRegistry

INVALID_CLASS = "invalid"

ARGUMENT_EVAL_TOOLS = ("prod_search", "shipment_status")


class LengthMismatchError(ReaperError):
    pass


class EmptyDenominatorError(ReaperError):
    pass


@dataclass(frozen=True)
class GoldExample:
    input: QueryInput
    gold_plan: Plan
    class_label: str


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class LatencyStats:
    single_shot_ms: float
    interleaved_ms: float
    speedup: float


@dataclass(frozen=True)
class EvalReport:
    per_class: dict[str, ClassMetrics]
    tool_accuracy: float
    confusion: dict[str, dict[str, int]]
    argument_accuracy: float | None = None
    instruction_following: float | None = None
    latency: LatencyStats | None = None

    def to_dict(self) -> dict:
        out: dict = {
            "per_class": {
                label: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for label, m in self.per_class.items()
            },
            "tool_accuracy": self.tool_accuracy,
            "confusion": self.confusion,
        }
        if self.argument_accuracy is not None:
            out["argument_accuracy"] = self.argument_accuracy
        if self.instruction_following is not None:
            out["instruction_following"] = self.instruction_following
        if self.latency is not None:
            out["latency"] = {
                "single_shot_ms": self.latency.single_shot_ms,
                "interleaved_ms": self.latency.interleaved_ms,
                "speedup": self.latency.speedup,
            }
        return out


def _canonical_sequence(
    plan: Plan | None, registry: ToolRegistry
) -> list[str] | None:
    if plan is None:
        return None
    try:
        return [registry.canonical_of(step.tool_name) for step in plan.steps]
    except UnknownToolError:
        return None


def predicted_class(plan: Plan | None, registry: ToolRegistry) -> str:
    """Class assigned to a prediction: the class of its primary tool (the
    first evidence-producing step). ``"invalid"`` when the prediction did not
    parse or its primary tool is not a known tool; a hallucinated tool in a
    later step does not change the class, only correctness."""
    if plan is None:
        return INVALID_CLASS
    fallback = INVALID_CLASS
    for step in plan.steps:
        try:
            canonical = registry.canonical_of(step.tool_name)
        except UnknownToolError:
            return INVALID_CLASS
        if canonical != NO_RETRIEVAL_TOOL:
            return registry.resolve(canonical).class_label
        fallback = registry.resolve(canonical).class_label
    return fallback


def tool_selection_metrics(
    predictions: Sequence[Plan | None],
    gold: Sequence[GoldExample],
    registry: ToolRegistry,
) -> EvalReport:
    """Per-class precision/recall/F1 plus sequence-exact tool accuracy."""
    if len(predictions) != len(gold):
        raise LengthMismatchError(
            f"{len(predictions)} predictions for {len(gold)} gold examples"
        )
    if not gold:
        raise EmptyDenominatorError("no gold examples")

    confusion: dict[str, dict[str, int]] = {}
    correct = 0
    for prediction, example in zip(predictions, gold):
        predicted = predicted_class(prediction, registry)
        row = confusion.setdefault(example.class_label, {})
        row[predicted] = row.get(predicted, 0) + 1
        gold_sequence = _canonical_sequence(example.gold_plan, registry)
        if _canonical_sequence(prediction, registry) == gold_sequence:
            correct += 1

    labels = sorted(
        set(confusion) | {p for row in confusion.values() for p in row}
    )
    per_class: dict[str, ClassMetrics] = {}
    for label in labels:
        support = sum(confusion.get(label, {}).values())
        predicted_count = sum(row.get(label, 0) for row in confusion.values())
        true_positive = confusion.get(label, {}).get(label, 0)
        precision = true_positive / predicted_count if predicted_count else 0.0
        recall = true_positive / support if support else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        per_class[label] = ClassMetrics(precision, recall, f1, support)

    return EvalReport(
        per_class=per_class,
        tool_accuracy=correct / len(gold),
        confusion=confusion,
    )


def _normalized_args(step_args) -> dict[str, str]:
    return {
        name: (value.text if isinstance(value, Literal) else render_value(value))
        .strip()
        .casefold()
        for name, value in step_args
    }


def _rewrite_steps(
    plan: Plan | None, registry: ToolRegistry, tools: Sequence[str]
) -> list[tuple[str, dict[str, str]]] | None:
    if plan is None:
        return None
    out = []
    for step in plan.steps:
        try:
            canonical = registry.canonical_of(step.tool_name)
        except UnknownToolError:
            continue
        if canonical in tools:
            out.append((canonical, _normalized_args(step.args)))
    return out


def argument_accuracy(
    predictions: Sequence[Plan | None],
    gold: Sequence[GoldExample],
    registry: ToolRegistry,
    tools: Sequence[str] = ARGUMENT_EVAL_TOOLS,
) -> float:
    """Fraction of qualifying examples whose predicted arguments all match
    gold, over gold plans using the query-rewriting tools."""
    if len(predictions) != len(gold):
        raise LengthMismatchError(
            f"{len(predictions)} predictions for {len(gold)} gold examples"
        )
    qualifying = 0
    matched = 0
    for prediction, example in zip(predictions, gold):
        gold_steps = _rewrite_steps(example.gold_plan, registry, tools)
        if not gold_steps:
            continue
        qualifying += 1
        if _rewrite_steps(prediction, registry, tools) == gold_steps:
            matched += 1
    if qualifying == 0:
        raise EmptyDenominatorError(
            f"no gold example uses any of {', '.join(tools)}"
        )
    return matched / qualifying


def instruction_following_score(
    predictions: Sequence[Plan | None],
    omitted_tool: str,
    registry: ToolRegistry,
) -> float:
    """1 minus the fraction of plans that use the omitted tool under any of
    its name variants."""
    if not predictions:
        raise EmptyDenominatorError("no predictions")
    omitted = registry.canonical_of(omitted_tool)
    violating = 0
    for prediction in predictions:
        sequence = _canonical_sequence(prediction, registry) or []
        if omitted in sequence:
            violating += 1
    # single division keeps the score an exact multiple of 1/N
    return (len(predictions) - violating) / len(predictions)


def latency_bench(
    plan: Plan,
    llm_latency_single_ms: float,
    llm_latency_per_step_ms: float,
    retriever: Retriever,
    registry: ToolRegistry,
) -> LatencyStats:
    """Compare one-call planning against interleaved planning on the same
    tool latencies: the single-shot planner pays one model call and the
    dependency-parallel tool schedule, the interleaved agent pays one model
    call per step and runs tools sequentially."""
    trace = execute_plan(plan, registry, retriever)
    failed = [s for s in trace.steps if s.status is not StepStatus.OK]
    if failed:
        raise ReaperError(
            f"latency bench needs a fully executable plan; step "
            f"{failed[0].index} {failed[0].status.value}: {failed[0].error}"
        )
    tool_total = sum(step.latency_ms for step in trace.steps)
    single_shot = llm_latency_single_ms + trace.critical_path_ms
    interleaved = llm_latency_per_step_ms * len(trace.steps) + tool_total
    return LatencyStats(
        single_shot_ms=single_shot,
        interleaved_ms=interleaved,
        speedup=interleaved / single_shot,
    )


def evaluate(
    predictions: Sequence[Plan | None],
    gold: Sequence[GoldExample],
    registry: ToolRegistry,
    omitted_tool: str | None = None,
) -> EvalReport:
    """Full report: selection metrics, argument accuracy when computable, and
    the instruction-following score when an omitted tool is named."""
    report = tool_selection_metrics(predictions, gold, registry)
    try:
        report = replace(
            report,
            argument_accuracy=argument_accuracy(predictions, gold, registry),
        )
    except EmptyDenominatorError:
        pass
    if omitted_tool is not None:
        report = replace(
            report,
            instruction_following=instruction_following_score(
                predictions, omitted_tool, registry
            ),
        )
    return report


def load_gold(path: str | Path) -> list[GoldExample]:
    """Gold JSONL: {"query", "context", "gold_plan", "class"} per line."""
    examples = []
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        record = json.loads(line)
        try:
            examples.append(
                GoldExample(
                    input=QueryInput(record["query"], record.get("context")),
                    gold_plan=parse_plan(record["gold_plan"]),
                    class_label=record["class"],
                )
            )
        except KeyError as exc:
            raise ValueError(
                f"{path} line {line_no}: missing field {exc}"
            ) from exc
    return examples


def load_predictions(path: str | Path) -> list[Plan | None]:
    """Prediction JSONL: {"plan": str} per line; unparseable plans load as
    None and score as invalid."""
    predictions: list[Plan | None] = []
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        record = json.loads(line)
        if "plan" not in record:
            raise ValueError(f"{path} line {line_no}: missing field 'plan'")
        try:
            predictions.append(parse_plan(record["plan"]))
        except PlanParseError:
            predictions.append(None)
    return predictions
