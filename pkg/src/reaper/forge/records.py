"""Record and configuration types for the training-data forge."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from ..plan import Plan
from ..prompt import DEFAULT_EXAMPLE_COUNT, QueryInput


class TaskKind(str, Enum):
    PRIMARY = "primary"
    T1 = "T1"  # write the query a plan answers
    T2 = "T2"  # complete a partial plan
    T3 = "T3"  # name the tools a query needs
    T4 = "T4"  # reconstruct a masked step
    T5 = "T5"  # reorder shuffled steps
    T6 = "T6"  # recover a masked argument value
    T7 = "T7"  # plan with a restricted tool set
    GENERIC = "generic"


SECONDARY_KINDS = (
    TaskKind.T1,
    TaskKind.T2,
    TaskKind.T3,
    TaskKind.T4,
    TaskKind.T5,
    TaskKind.T6,
    TaskKind.T7,
)


@dataclass(frozen=True)
class PrimaryTask:
    """One labeled planning example: customer input and its gold plan."""

    input: QueryInput
    target: Plan


@dataclass(frozen=True)
class TrainingRecord:
    prompt: str
    target: str
    task_kind: TaskKind
    source_id: str

    def __post_init__(self):
        if not self.prompt or not self.target:
            raise ValueError("prompt and target must be non-empty")

    def to_json(self) -> str:
        return json.dumps(
            {
                "prompt": self.prompt,
                "target": self.target,
                "task_kind": self.task_kind.value,
                "source_id": self.source_id,
            },
            ensure_ascii=False,
        )


@dataclass(frozen=True)
class ForgeConfig:
    """Knobs for one forge run; ``tevo_seed`` is the run's master seed."""

    tasks_per_query: int = 1
    tevo_seed: int = 0
    extra_tool_count: int = 2
    generic_fraction: float = 1.0
    generic_pool_path: str | Path | None = None  # None -> shipped stand-in pool
    example_count: int = DEFAULT_EXAMPLE_COUNT

    def __post_init__(self):
        if not 1 <= self.tasks_per_query <= 1 + len(SECONDARY_KINDS):
            raise ValueError(
                f"tasks_per_query must be in [1, {1 + len(SECONDARY_KINDS)}]"
            )
        if not 0.0 <= self.generic_fraction <= 1.0:
            raise ValueError("generic_fraction must be in [0, 1]")
        if self.extra_tool_count < 0 or self.example_count < 0:
            raise ValueError("counts must be non-negative")


@dataclass(frozen=True)
class DqsConfig:
    extreme_pairs: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.extreme_pairs < 0:
            raise ValueError("extreme_pairs must be non-negative")


@dataclass(frozen=True)
class MixManifest:
    reaper_count: int
    generic_count: int
    ratio: str
    seed: int

    def to_dict(self) -> dict:
        return {
            "reaper_count": self.reaper_count,
            "generic_count": self.generic_count,
            "ratio": self.ratio,
            "seed": self.seed,
        }
