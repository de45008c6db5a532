"""The retrieval-plan language: parsing, rendering, validation, canonicalization.

A plan is a list of numbered tool calls, one per line:

    Step 1: shipment_status(query="galaxy phone order")
    Step 2: prod_qna(product_id=$1.product_id, query="memory capacity")

Step indices run contiguously from 1. Argument values are double-quoted
literals, references to an earlier step's output (``$k`` for the whole
output, ``$k.field.path`` for a named field), or references to a page-context
field (``$context.field``). A step may only reference steps strictly before
it, so every plan is a DAG expressed as a linear list with back-references.

``parse_plan`` is strict and fail-fast: it accepts exactly the grammar above
and raises :class:`PlanParseError` at the first defect in document order.
Registry-aware checks (unknown tools, missing parameters) are not parse
errors; they are reported as :class:`Violation` values by ``validate_plan``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Mapping, NoReturn, Union

from .errors import ReaperError, UnknownToolError

if TYPE_CHECKING:
    from .registry import ToolRegistry

IDENT_RE = re.compile(r"[a-z][a-z0-9_]*\Z")

# Characters that may legally appear outside string literals. Anything else
# encountered where a token is expected is a lexical error rather than a
# structural one.
_BARE_CHARS = frozenset('abcdefghijklmnopqrstuvwxyz0123456789_"$.,()=: ')


class ParseErrorKind(str, Enum):
    LEX = "Lex"
    SYNTAX = "Syntax"
    INDEX_GAP = "IndexGap"
    FORWARD_REF = "ForwardRef"
    DUPLICATE_PARAM = "DuplicateParam"


class PlanParseError(ReaperError):
    """First defect found while parsing plan text, in document order."""

    def __init__(self, kind: ParseErrorKind, line: int, message: str):
        super().__init__(f"line {line}: {kind.value}: {message}")
        self.kind = kind
        self.line = line
        self.message = message


@dataclass(frozen=True)
class Literal:
    """A verbatim string argument."""

    text: str


@dataclass(frozen=True)
class StepRef:
    """Reference to an earlier step's output; ``field`` is a dot path or None
    for the whole output (resolved through the conventional ``text`` field)."""

    step: int
    field: str | None = None


@dataclass(frozen=True)
class ContextRef:
    """Reference to a named field of the page context."""

    field: str


ArgValue = Union[Literal, StepRef, ContextRef]


@dataclass(frozen=True)
class PlanStep:
    index: int
    tool_name: str
    args: tuple[tuple[str, ArgValue], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple((n, v) for n, v in self.args))
        if self.index < 1:
            raise ValueError(f"step index must be positive, got {self.index}")
        if not IDENT_RE.match(self.tool_name):
            raise ValueError(f"invalid tool name: {self.tool_name!r}")
        seen = set()
        for name, value in self.args:
            if not IDENT_RE.match(name):
                raise ValueError(f"invalid parameter name: {name!r}")
            if name in seen:
                raise ValueError(f"duplicate parameter {name!r} in step {self.index}")
            seen.add(name)
            if isinstance(value, StepRef):
                if not 1 <= value.step < self.index:
                    raise ValueError(
                        f"step {self.index} references ${value.step}; "
                        "references must point to an earlier step"
                    )
                if value.field is not None and not all(
                    IDENT_RE.match(part) for part in value.field.split(".")
                ):
                    raise ValueError(f"invalid field path: {value.field!r}")
            elif isinstance(value, ContextRef):
                if not IDENT_RE.match(value.field):
                    raise ValueError(f"invalid context field: {value.field!r}")
            elif not isinstance(value, Literal):
                raise TypeError(f"unsupported argument value: {value!r}")


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValueError("a plan must contain at least one step")
        for position, step in enumerate(self.steps, start=1):
            if step.index != position:
                raise ValueError(
                    f"step indices must be contiguous from 1; "
                    f"expected {position}, got {step.index}"
                )

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class Violation:
    """A registry-level defect in an otherwise well-formed plan."""

    kind: str  # UnknownTool | MissingParam | UnknownParam
    step_index: int
    tool_name: str
    param: str | None
    message: str


class _LineParser:
    """Recursive-descent parser for a single ``Step N: call(...)`` line."""

    def __init__(self, line: str, line_no: int):
        self.s = line
        self.i = 0
        self.line_no = line_no

    def fail(self, kind: ParseErrorKind, message: str) -> NoReturn:
        raise PlanParseError(kind, self.line_no, message)

    def peek(self) -> str:
        return self.s[self.i] if self.i < len(self.s) else ""

    def expect(self, token: str, what: str) -> None:
        if not self.s.startswith(token, self.i):
            self.fail(ParseErrorKind.SYNTAX, f"expected {what}")
        self.i += len(token)

    def take_int(self, what: str) -> int:
        start = self.i
        while self.peek().isdigit():
            self.i += 1
        if self.i == start:
            self.fail(ParseErrorKind.SYNTAX, f"expected {what}")
        return int(self.s[start : self.i])

    def take_ident(self, what: str) -> str:
        ch = self.peek()
        if not ("a" <= ch <= "z"):
            if ch and ch not in _BARE_CHARS:
                self.fail(ParseErrorKind.LEX, f"illegal character {ch!r}")
            self.fail(ParseErrorKind.SYNTAX, f"expected {what}")
        start = self.i
        while True:
            ch = self.peek()
            if ("a" <= ch <= "z") or ch.isdigit() or ch == "_":
                self.i += 1
            else:
                break
        return self.s[start : self.i]

    def take_string(self) -> Literal:
        self.i += 1  # opening quote
        out: list[str] = []
        while True:
            if self.i >= len(self.s):
                self.fail(ParseErrorKind.LEX, "unterminated string literal")
            ch = self.s[self.i]
            if ch == "\\":
                if self.i + 1 >= len(self.s):
                    self.fail(ParseErrorKind.LEX, "unterminated string literal")
                escaped = self.s[self.i + 1]
                # the renderer emits exactly \\, \" and \n (strings must stay
                # on one line); any other escaped char decodes to itself
                out.append("\n" if escaped == "n" else escaped)
                self.i += 2
            elif ch == '"':
                self.i += 1
                return Literal("".join(out))
            else:
                out.append(ch)
                self.i += 1

    def take_value(self, step_index: int) -> ArgValue:
        ch = self.peek()
        if ch == '"':
            return self.take_string()
        if ch == "$":
            self.i += 1
            if self.peek().isdigit():
                target = self.take_int("step number")
                field = None
                if self.peek() == ".":
                    parts = []
                    while self.peek() == ".":
                        self.i += 1
                        parts.append(self.take_ident("field name"))
                    field = ".".join(parts)
                if not 1 <= target < step_index:
                    self.fail(
                        ParseErrorKind.FORWARD_REF,
                        f"${target} in step {step_index} must reference an "
                        "existing earlier step",
                    )
                return StepRef(target, field)
            if self.s.startswith("context.", self.i):
                self.i += len("context.")
                return ContextRef(self.take_ident("context field name"))
            self.fail(
                ParseErrorKind.SYNTAX,
                "expected a step number or 'context.' after '$'",
            )
        if ch and ch not in _BARE_CHARS:
            self.fail(ParseErrorKind.LEX, f"illegal character {ch!r}")
        self.fail(
            ParseErrorKind.SYNTAX,
            "argument value must be a quoted string, $k reference, "
            "or $context reference",
        )

    def parse(self) -> PlanStep:
        self.expect("Step ", "'Step <n>: <tool>(...)'")
        index = self.take_int("step number")
        if index != self.line_no:
            self.fail(
                ParseErrorKind.INDEX_GAP,
                f"expected step {self.line_no}, got step {index}",
            )
        self.expect(": ", "': ' after the step number")
        tool = self.take_ident("tool name")
        self.expect("(", "'(' after the tool name")
        args: list[tuple[str, ArgValue]] = []
        names: set[str] = set()
        if self.peek() != ")":
            while True:
                name = self.take_ident("parameter name")
                if name in names:
                    self.fail(
                        ParseErrorKind.DUPLICATE_PARAM,
                        f"duplicate parameter {name!r}",
                    )
                names.add(name)
                self.expect("=", "'=' after the parameter name")
                args.append((name, self.take_value(index)))
                if self.s.startswith(", ", self.i):
                    self.i += 2
                    continue
                break
        self.expect(")", "')' closing the argument list")
        if self.i != len(self.s):
            self.fail(
                ParseErrorKind.SYNTAX,
                f"unexpected trailing text: {self.s[self.i:]!r}",
            )
        return PlanStep(index, tool, tuple(args))


def parse_plan(text: str) -> Plan:
    """Parse plan text, raising :class:`PlanParseError` on the first defect."""
    steps = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        steps.append(_LineParser(line, line_no).parse())
    return Plan(tuple(steps))


def render_value(value: ArgValue) -> str:
    """Canonical surface form of one argument value."""
    if isinstance(value, Literal):
        escaped = (
            value.text.replace("\\", "\\\\")
            .replace('"', '\\"')
            .replace("\n", "\\n")
        )
        return f'"{escaped}"'
    if isinstance(value, StepRef):
        return f"${value.step}" + (f".{value.field}" if value.field else "")
    return f"$context.{value.field}"


def render_step(step: PlanStep) -> str:
    args = ", ".join(f"{name}={render_value(value)}" for name, value in step.args)
    return f"Step {step.index}: {step.tool_name}({args})"


def render_plan(plan: Plan) -> str:
    """Canonical text for a plan; ``parse_plan(render_plan(p)) == p``."""
    return "\n".join(render_step(step) for step in plan.steps)


def validate_plan(plan: Plan, registry: "ToolRegistry") -> list[Violation]:
    """Check every call against the registry; an empty list means the plan is
    executable. Violations are data, not exceptions."""
    violations: list[Violation] = []
    for step in plan.steps:
        try:
            spec = registry.resolve(step.tool_name)
        except UnknownToolError:
            violations.append(
                Violation(
                    "UnknownTool",
                    step.index,
                    step.tool_name,
                    None,
                    f"step {step.index}: unknown tool {step.tool_name!r}",
                )
            )
            continue
        present = {name for name, _ in step.args}
        known = {p.name for p in spec.params}
        for param in spec.params:
            if param.required and param.name not in present:
                violations.append(
                    Violation(
                        "MissingParam",
                        step.index,
                        step.tool_name,
                        param.name,
                        f"step {step.index}: {step.tool_name} is missing "
                        f"required parameter {param.name!r}",
                    )
                )
        for name in present - known:
            violations.append(
                Violation(
                    "UnknownParam",
                    step.index,
                    step.tool_name,
                    name,
                    f"step {step.index}: {step.tool_name} does not accept "
                    f"parameter {name!r}",
                )
            )
    return violations


def tool_sequence(plan: Plan, registry: "ToolRegistry") -> list[str]:
    """Canonical tool names in step order; variant names are normalized.

    Raises :class:`UnknownToolError` for a name no registry variant covers.
    """
    return [registry.canonical_of(step.tool_name) for step in plan.steps]


def rename_tools(plan: Plan, mapping: Mapping[str, str]) -> Plan:
    """Return a copy of ``plan`` with tool names substituted via ``mapping``;
    names absent from the mapping are kept."""
    return Plan(
        tuple(
            replace(step, tool_name=mapping.get(step.tool_name, step.tool_name))
            for step in plan.steps
        )
    )
