"""Planner prompt assembly.

A prompt is a pure function of a :class:`PromptSpec`: role text, system
instruction, the tool block (rendered from a registry, in registry order),
in-context examples, and the customer input. Identical specs always render
to identical bytes; golden files under ``tests/golden`` pin the layout.

``adversarial_omit`` builds the instruction-following probe: it removes one
tool from the spec entirely, including every in-context example that uses it,
so the rendered prompt contains no surface form of that tool.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import yaml

from .plan import Plan, parse_plan, render_plan
from .registry import ToolRegistry, ToolSpec

DEFAULT_ROLE = (
    "You are a retrieval planning assistant for a retail shopping service. "
    "Your job is to decide which information sources must be consulted, and "
    "in what order, to answer the customer's question."
)

DEFAULT_SYSTEM_INSTRUCTION = (
    "Write a numbered retrieval plan using only the tools listed below. "
    "Every step calls exactly one tool on its own line, in the form "
    'Step N: tool(param="value"). A later step may consume an earlier '
    "step's result by writing $k for the whole result or $k.field for one "
    "of its fields, and page context fields are available as $context.field. "
    "Do not invent tools that are not listed and do not add any explanation."
)

# Number of in-context examples sampled into a prompt unless configured.
DEFAULT_EXAMPLE_COUNT = 4


@dataclass(frozen=True)
class QueryInput:
    """The customer query plus optional page context (e.g. a product title)."""

    query: str
    context: str | None = None

    def __post_init__(self):
        if not self.query:
            raise ValueError("query must be non-empty")


@dataclass(frozen=True)
class InContextExample:
    input: QueryInput
    target_plan: Plan


@dataclass(frozen=True)
class PromptSpec:
    role_text: str
    system_instruction: str
    tools: ToolRegistry
    examples: tuple[InContextExample, ...]
    input: QueryInput

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        for example in self.examples:
            for step in example.target_plan.steps:
                # raises UnknownToolError when an example uses a tool that is
                # not in the prompt's tool block
                self.tools.resolve(step.tool_name)


def _tool_entry(number: int, spec: ToolSpec) -> str:
    signature = ", ".join(
        p.name if p.required else f"{p.name}?" for p in spec.params
    )
    return (
        f"{number}. {spec.canonical_name} - Tool: {spec.description} "
        f"Signature: {spec.canonical_name}({signature}). "
        f"Example usage: {spec.example_usage}"
    )


def _input_lines(query_input: QueryInput) -> list[str]:
    lines = [f"Query: {query_input.query}"]
    if query_input.context is not None:
        lines.append(f"Context: {query_input.context}")
    return lines


def build_prompt(spec: PromptSpec) -> str:
    """Render the prompt text; byte-deterministic in the spec."""
    lines: list[str] = ["### Role:", spec.role_text, ""]
    lines += ["### System Instruction:", spec.system_instruction, ""]
    lines += ["Candidate tools:", ""]
    for number, tool in enumerate(spec.tools, start=1):
        lines.append(_tool_entry(number, tool))
    lines += ["", "### Examples:", ""]
    for number, example in enumerate(spec.examples, start=1):
        lines.append(f"Example {number}:")
        lines += _input_lines(example.input)
        lines.append("Plan:")
        lines.append(render_plan(example.target_plan))
        lines.append("")
    lines.append("### Input:")
    lines += _input_lines(spec.input)
    return "\n".join(lines)


def adversarial_omit(spec: PromptSpec, tool: str) -> PromptSpec:
    """Remove ``tool`` (by any of its names) from the prompt: out of the tool
    block, and dropping every example whose plan uses it."""
    canonical = spec.tools.canonical_of(tool)
    kept_examples = tuple(
        example
        for example in spec.examples
        if canonical
        not in {
            spec.tools.canonical_of(step.tool_name)
            for step in example.target_plan.steps
        }
    )
    return replace(spec, tools=spec.tools.without(canonical), examples=kept_examples)


def load_example_pool(path: str | Path | None = None) -> list[InContextExample]:
    """Load the demonstration pool (shipped pool when ``path`` is None)."""
    if path is None:
        text = (
            resources.files("reaper.data")
            .joinpath("example_pool.yaml")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text)
    pool = []
    for entry in data["examples"]:
        pool.append(
            InContextExample(
                input=QueryInput(entry["query"], entry.get("context")),
                target_plan=parse_plan(entry["plan"]),
            )
        )
    return pool
