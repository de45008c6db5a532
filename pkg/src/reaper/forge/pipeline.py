"""The end-to-end forge run: diverse sampling, record generation, mixing.

Record count law: every surviving query yields exactly ``tasks_per_query``
records (one evolved primary plus ``tasks_per_query - 1`` secondaries whose
kinds are sampled without replacement from the applicable ones, cycling when
fewer kinds apply than are needed). The output JSONL is a pure function of
the inputs and the configured seeds.
"""

from __future__ import annotations

import os
import random
from pathlib import Path
from typing import Sequence

from ..embedding import EmbeddingProvider
from ..plan import render_plan
from ..prompt import InContextExample, build_prompt, load_example_pool
from ..registry import ToolRegistry
from .dqs import dqs_sample_indices
from .mixer import load_generic_pool, mix_dataset
from .records import (
    DqsConfig,
    ForgeConfig,
    MixManifest,
    PrimaryTask,
    TaskKind,
    TrainingRecord,
)
from .tevo import evolve_target, tevo_evolve
from .ttg import applicable_kinds, ttg_transform

_SEED_STRIDE = 1_000_003


def generate_records(
    task: PrimaryTask,
    registry: ToolRegistry,
    cfg: ForgeConfig,
    rng_seed: int,
    source_id: str,
    example_pool: Sequence[InContextExample] | None = None,
) -> list[TrainingRecord]:
    """All ``tasks_per_query`` records for one surviving query."""
    rng = random.Random(rng_seed)
    spec = tevo_evolve(
        task, registry, cfg, rng.randrange(2**31), example_pool=example_pool
    )
    records = [
        TrainingRecord(
            prompt=build_prompt(spec),
            target=render_plan(evolve_target(task, spec, registry)),
            task_kind=TaskKind.PRIMARY,
            source_id=source_id,
        )
    ]
    kinds: list[TaskKind] = []
    applicable = applicable_kinds(task)
    needed = cfg.tasks_per_query - 1
    while len(kinds) < needed:
        kinds.extend(rng.sample(applicable, min(needed - len(kinds), len(applicable))))
    for kind in kinds:
        records.append(
            ttg_transform(
                task, kind, registry, rng.randrange(2**31), source_id=source_id
            )
        )
    return records


def write_records(records: Sequence[TrainingRecord], out: str | Path) -> None:
    """Write training JSONL atomically; no partial file survives a failure."""
    out = Path(out)
    tmp = out.with_name(out.name + ".tmp")
    try:
        with tmp.open("w", encoding="utf-8") as handle:
            for record in records:
                handle.write(record.to_json() + "\n")
        os.replace(tmp, out)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def forge_run(
    tasks: Sequence[PrimaryTask],
    registry: ToolRegistry,
    cfg: ForgeConfig,
    dqs_cfg: DqsConfig,
    provider: EmbeddingProvider,
    out: str | Path,
    q_initial: Sequence[str] | None = None,
    example_pool: Sequence[InContextExample] | None = None,
) -> MixManifest:
    """Run the full pipeline and write the mixed dataset to ``out``.

    ``q_initial`` is the curated reference pool for diverse sampling; when
    omitted, the task pool itself is used, which makes the sampling stage an
    order-shuffling pass-through (and requires ``extreme_pairs == 0``).
    """
    queries = [task.input.query for task in tasks]
    reference = list(q_initial) if q_initial is not None else queries
    surviving = dqs_sample_indices(reference, queries, provider, dqs_cfg)
    if example_pool is None:
        example_pool = load_example_pool()

    records: list[TrainingRecord] = []
    for index in surviving:
        records.extend(
            generate_records(
                tasks[index],
                registry,
                cfg,
                rng_seed=cfg.tevo_seed * _SEED_STRIDE + index,
                source_id=f"q{index:05d}",
                example_pool=example_pool,
            )
        )

    generic_pool = load_generic_pool(cfg.generic_pool_path)
    mixed, manifest = mix_dataset(records, generic_pool, cfg, seed=cfg.tevo_seed)
    write_records(mixed, out)
    return manifest
