"""Secondary task generation: derive related training tasks from a labeled
planning example.

Seven transformations are supported (see :class:`TaskKind`): writing the
query a plan answers, completing a truncated plan, naming the needed tools,
reconstructing a masked step, reordering shuffled steps, recovering a masked
argument value, and refusing to plan when a needed tool is withheld. Kinds
that do not apply to a given plan (too short, or no arguments to mask) raise
:class:`NotApplicableError` so callers can sample a different kind.
"""

from __future__ import annotations

import hashlib
import random

from ..errors import ReaperError
from ..plan import render_plan, render_value, tool_sequence
from ..prompt import QueryInput
from ..registry import ToolRegistry
from .records import PrimaryTask, TaskKind, TrainingRecord

MASKED_STEP_TOKEN = "[MASKED_STEP]"
MASKED_PARAM_TOKEN = "[MASKED_PARAM]"
NO_VALID_PLAN = "no_valid_plan"


class NotApplicableError(ReaperError):
    """The requested transformation does not apply to this plan shape."""

    def __init__(self, kind: TaskKind, reason: str):
        super().__init__(f"{kind.value} not applicable: {reason}")
        self.kind = kind


def applicable_kinds(task: PrimaryTask) -> list[TaskKind]:
    """Secondary kinds valid for this task, in fixed T1..T7 order."""
    kinds = [TaskKind.T1, TaskKind.T3, TaskKind.T7]
    if len(task.target) >= 2:
        kinds += [TaskKind.T2, TaskKind.T4, TaskKind.T5]
    if any(step.args for step in task.target.steps):
        kinds.append(TaskKind.T6)
    return sorted(kinds, key=lambda k: k.value)


def _default_source_id(task: PrimaryTask) -> str:
    digest = hashlib.sha1(task.input.query.encode("utf-8")).hexdigest()
    return f"q-{digest[:12]}"


def _input_block(query_input: QueryInput) -> str:
    block = f"Query: {query_input.query}"
    if query_input.context is not None:
        block += f"\nContext: {query_input.context}"
    return block


def _require_steps(task: PrimaryTask, kind: TaskKind) -> list[str]:
    if len(task.target) < 2:
        raise NotApplicableError(kind, "plan has a single step")
    return render_plan(task.target).split("\n")


def ttg_transform(
    task: PrimaryTask,
    kind: TaskKind,
    registry: ToolRegistry,
    rng_seed: int,
    source_id: str | None = None,
) -> TrainingRecord:
    """Build one secondary training record; deterministic in ``rng_seed``."""
    rng = random.Random(rng_seed)
    sid = source_id if source_id is not None else _default_source_id(task)
    plan_text = render_plan(task.target)

    if kind is TaskKind.T1:
        prompt = (
            "Write the customer question that the retrieval plan below was "
            f"made to answer.\n\nPlan:\n{plan_text}"
        )
        return TrainingRecord(prompt, task.input.query, kind, sid)

    if kind is TaskKind.T2:
        lines = _require_steps(task, kind)
        keep = (len(lines) + 1) // 2
        prompt = (
            "Complete the retrieval plan below by writing its remaining "
            f"steps.\n\n{_input_block(task.input)}\n\nPartial plan:\n"
            + "\n".join(lines[:keep])
        )
        return TrainingRecord(prompt, "\n".join(lines[keep:]), kind, sid)

    if kind is TaskKind.T3:
        target = ", ".join(tool_sequence(task.target, registry))
        prompt = (
            "Name the tools needed to answer the customer question, in call "
            "order, separated by commas.\n\n" + _input_block(task.input)
        )
        return TrainingRecord(prompt, target, kind, sid)

    if kind is TaskKind.T4:
        lines = _require_steps(task, kind)
        masked = rng.randrange(len(lines))
        shown = lines[:masked] + [MASKED_STEP_TOKEN] + lines[masked + 1 :]
        prompt = (
            f"One step of the plan below was replaced by {MASKED_STEP_TOKEN}. "
            f"Write the missing step.\n\n{_input_block(task.input)}\n\nPlan:\n"
            + "\n".join(shown)
        )
        return TrainingRecord(prompt, lines[masked], kind, sid)

    if kind is TaskKind.T5:
        lines = _require_steps(task, kind)
        order = list(range(len(lines)))
        while order == sorted(order):
            rng.shuffle(order)
        prompt = (
            "The steps of the plan below are out of order. Rewrite the plan "
            f"in the correct order.\n\n{_input_block(task.input)}\n\n"
            "Shuffled plan:\n" + "\n".join(lines[i] for i in order)
        )
        return TrainingRecord(prompt, plan_text, kind, sid)

    if kind is TaskKind.T6:
        slots = [
            (step.index, name)
            for step in task.target.steps
            for name, _ in step.args
        ]
        if not slots:
            raise NotApplicableError(kind, "plan has no arguments")
        target_index, target_param = rng.choice(slots)
        lines = []
        masked_value = ""
        for step in task.target.steps:
            parts = []
            for name, value in step.args:
                rendered = render_value(value)
                if step.index == target_index and name == target_param:
                    masked_value = rendered
                    parts.append(f"{name}={MASKED_PARAM_TOKEN}")
                else:
                    parts.append(f"{name}={rendered}")
            lines.append(
                f"Step {step.index}: {step.tool_name}({', '.join(parts)})"
            )
        prompt = (
            f"One argument value in the plan below was replaced by "
            f"{MASKED_PARAM_TOKEN}. Write the missing value.\n\n"
            f"{_input_block(task.input)}\n\nPlan:\n" + "\n".join(lines)
        )
        return TrainingRecord(prompt, masked_value, kind, sid)

    if kind is TaskKind.T7:
        used = sorted(set(tool_sequence(task.target, registry)))
        withheld = rng.choice(used)
        offered = [
            name for name in registry.canonical_names if name != withheld
        ]
        tool_lines = [
            f"{n}. {name} - {registry.resolve(name).description}"
            for n, name in enumerate(offered, start=1)
        ]
        prompt = (
            "Using only the tools listed below, write a retrieval plan for "
            f"the customer question, or answer {NO_VALID_PLAN} if the listed "
            f"tools cannot answer it.\n\nTools:\n" + "\n".join(tool_lines)
            + f"\n\n{_input_block(task.input)}"
        )
        return TrainingRecord(prompt, NO_VALID_PLAN, kind, sid)

    raise ValueError(f"not a secondary task kind: {kind!r}")
