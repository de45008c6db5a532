"""Command-line entry point.

Subcommands: ``validate`` (parse and registry-check plan files), ``forge``
(generate a mixed training dataset), ``eval`` (score predictions against
gold), ``bench`` (single-shot vs interleaved latency on simulated tools),
and ``plan`` (generate a plan through a backend).

Exit codes: 0 success, 1 domain failure (violations, metric preconditions,
backend/plan errors), 2 usage or I/O problems. All subcommands accept
``--seed`` (default 1729) and produce bit-identical output for equal seeds.

Plan files hold one plan per block, blocks separated by blank lines. Task
files for ``forge`` are JSONL with {"query", "context", "plan"}; gold and
prediction files for ``eval`` follow the formats documented in
:mod:`reaper.evaluation`.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Mapping, Sequence

from .embedding import HashingEmbedder
from .errors import ReaperError
from .evaluation import evaluate, latency_bench, load_gold, load_predictions
from .executor import Retriever
from .forge import DqsConfig, ForgeConfig, PrimaryTask, forge_run
from .gateway import BACKEND_URL_ENV, RemoteBackend, generate_plan, scripted_stub
from .plan import PlanParseError, parse_plan, render_plan, validate_plan
from .prompt import (
    DEFAULT_EXAMPLE_COUNT,
    DEFAULT_ROLE,
    DEFAULT_SYSTEM_INSTRUCTION,
    PromptSpec,
    QueryInput,
    load_example_pool,
)
from .registry import SchemaError, ToolRegistry, default_registry, load_registry

DEFAULT_SEED = 1729


def _load_registry(path: str | None) -> ToolRegistry:
    return load_registry(path) if path else default_registry()


def _check_paths(inputs: Sequence[str | None], outputs: Sequence[str | None]) -> None:
    """Validate all paths up front, before any work starts."""
    for path in inputs:
        if path is not None and not Path(path).is_file():
            raise FileNotFoundError(f"no such file: {path}")
    for path in outputs:
        if path is not None and not Path(path).parent.is_dir():
            raise FileNotFoundError(f"output directory does not exist: {path}")


def read_plan_blocks(path: str | Path) -> list[str]:
    """Plan texts from a file of blank-line-separated blocks."""
    blocks: list[str] = []
    current: list[str] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.rstrip()
        if not line:
            if current:
                blocks.append("\n".join(current))
                current = []
        else:
            current.append(line)
    if current:
        blocks.append("\n".join(current))
    return blocks


def load_tasks(path: str | Path) -> list[PrimaryTask]:
    tasks = []
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        record = json.loads(line)
        try:
            tasks.append(
                PrimaryTask(
                    input=QueryInput(record["query"], record.get("context")),
                    target=parse_plan(record["plan"]),
                )
            )
        except KeyError as exc:
            raise ValueError(f"{path} line {line_no}: missing field {exc}") from exc
    return tasks


def cmd_validate(args: argparse.Namespace) -> int:
    _check_paths([args.plans, args.registry], [])
    registry = _load_registry(args.registry)
    blocks = read_plan_blocks(args.plans)
    clean = True
    for number, block in enumerate(blocks, start=1):
        try:
            plan = parse_plan(block)
        except PlanParseError as exc:
            print(f"plan {number}: parse error: {exc}")
            clean = False
            continue
        violations = validate_plan(plan, registry)
        for violation in violations:
            print(f"plan {number}: {violation.kind}: {violation.message}")
        clean = clean and not violations
    print(f"checked {len(blocks)} plan(s): {'clean' if clean else 'violations found'}")
    return 0 if clean else 1


def cmd_forge(args: argparse.Namespace) -> int:
    _check_paths(
        [args.tasks, args.registry, args.generic_pool],
        [args.out, args.manifest],
    )
    registry = _load_registry(args.registry)
    tasks = load_tasks(args.tasks)
    cfg = ForgeConfig(
        tasks_per_query=args.tasks_per_query,
        tevo_seed=args.seed,
        extra_tool_count=args.extra_tools,
        generic_fraction=args.generic_fraction,
        generic_pool_path=args.generic_pool,
    )
    dqs_cfg = DqsConfig(extreme_pairs=args.extreme_pairs, seed=args.seed)
    manifest = forge_run(
        tasks, registry, cfg, dqs_cfg, HashingEmbedder(), args.out
    )
    payload = json.dumps(manifest.to_dict(), indent=2)
    print(payload)
    if args.manifest:
        Path(args.manifest).write_text(payload + "\n", encoding="utf-8")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    _check_paths([args.pred, args.gold, args.registry], [args.out])
    registry = _load_registry(args.registry)
    predictions = load_predictions(args.pred)
    gold = load_gold(args.gold)
    report = evaluate(predictions, gold, registry, omitted_tool=args.omitted_tool)
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    print(payload)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    return 0


class _AnyFields(dict):
    """Bench output stand-in: resolves any referenced field to a placeholder."""

    def __init__(self, tool: str):
        super().__init__()
        self._tool = tool

    def __contains__(self, key) -> bool:
        return True

    def __missing__(self, key: str) -> str:
        return f"<{self._tool}.{key}>"


class _BenchRetriever:
    def __init__(self, latency_ms: float):
        self.latency_ms = latency_ms

    def invoke(
        self, tool: str, args: Mapping[str, str]
    ) -> tuple[Mapping[str, object], float]:
        return _AnyFields(tool), self.latency_ms


def cmd_bench(args: argparse.Namespace) -> int:
    _check_paths([args.plans, args.registry], [])
    registry = _load_registry(args.registry)
    retriever: Retriever = _BenchRetriever(args.tool_latency)
    rows = []
    for number, block in enumerate(read_plan_blocks(args.plans), start=1):
        plan = parse_plan(block)
        violations = validate_plan(plan, registry)
        if violations:
            for violation in violations:
                print(f"plan {number}: {violation.kind}: {violation.message}")
            return 1
        stats = latency_bench(
            plan, args.llm_single, args.llm_step, retriever, registry
        )
        rows.append((number, len(plan), stats))
    print(f"{'plan':>4}  {'steps':>5}  {'single_shot_ms':>14}  "
          f"{'interleaved_ms':>14}  {'speedup':>8}")
    for number, steps, stats in rows:
        print(
            f"{number:>4}  {steps:>5}  {stats.single_shot_ms:>14.1f}  "
            f"{stats.interleaved_ms:>14.1f}  {stats.speedup:>8.2f}"
        )
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    registry = _load_registry(args.registry)
    pool = [
        example
        for example in load_example_pool()
        if all(registry.has_tool(s.tool_name) for s in example.target_plan.steps)
    ]
    spec = PromptSpec(
        role_text=DEFAULT_ROLE,
        system_instruction=DEFAULT_SYSTEM_INSTRUCTION,
        tools=registry,
        examples=tuple(pool[: args.examples]),
        input=QueryInput(args.query, args.context),
    )
    if args.backend == "remote":
        backend = RemoteBackend()
    else:
        backend = scripted_stub(
            {ex.input.query: render_plan(ex.target_plan) for ex in pool},
            default="Step 1: no_retrieval()",
            latency_ms=0.0,
        )
    plan, latency = generate_plan(backend, spec)
    print(render_plan(plan))
    print(f"latency_ms: {latency:.1f}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reaper",
        description="Retrieval-plan toolkit: validate, forge, eval, bench, plan.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--registry", help="registry YAML (default: shipped six-tool registry)")
        p.add_argument(
            "--seed",
            type=int,
            default=DEFAULT_SEED,
            help=f"master seed for reproducible output (default {DEFAULT_SEED})",
        )

    p = sub.add_parser("validate", help="parse and registry-check a plan file")
    p.add_argument("plans", help="plan file, blocks separated by blank lines")
    add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("forge", help="generate a mixed training dataset")
    p.add_argument("--tasks", required=True, help="labeled tasks JSONL")
    p.add_argument("--out", required=True, help="output training JSONL")
    p.add_argument("--tasks-per-query", type=int, default=1)
    p.add_argument("--extra-tools", type=int, default=2,
                   help="distractor tools added per evolved prompt")
    p.add_argument("--generic-fraction", type=float, default=1.0)
    p.add_argument("--generic-pool", help="generic pool JSONL (default: shipped)")
    p.add_argument("--extreme-pairs", type=int, default=0)
    p.add_argument("--manifest", help="also write the mix manifest JSON here")
    add_common(p)
    p.set_defaults(func=cmd_forge)

    p = sub.add_parser("eval", help="score predictions against gold labels")
    p.add_argument("--pred", required=True, help="prediction JSONL")
    p.add_argument("--gold", required=True, help="gold JSONL")
    p.add_argument("--omitted-tool", help="score instruction following for this tool")
    p.add_argument("--out", help="also write the report JSON here")
    add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="single-shot vs interleaved latency table")
    p.add_argument("plans", help="plan file, blocks separated by blank lines")
    p.add_argument("--llm-single", type=float, default=207.0,
                   help="planner latency for one full-plan call (ms)")
    p.add_argument("--llm-step", type=float, default=2000.0,
                   help="agent latency per interleaved reasoning step (ms)")
    p.add_argument("--tool-latency", type=float, default=50.0,
                   help="simulated latency per tool call (ms)")
    add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plan", help="generate a plan for one query")
    p.add_argument("query")
    p.add_argument("--context", help="page context, e.g. a product title")
    p.add_argument("--backend", choices=["stub", "remote"], default="stub",
                   help=f"remote uses ${BACKEND_URL_ENV}")
    p.add_argument("--examples", type=int, default=DEFAULT_EXAMPLE_COUNT)
    add_common(p)
    p.set_defaults(func=cmd_plan)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: bad input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ReaperError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
