"""Mixing plan-task records with generic instruction-following records."""

from __future__ import annotations

import json
import math
import random
from importlib import resources
from pathlib import Path
from typing import Sequence

from .records import ForgeConfig, MixManifest, TaskKind, TrainingRecord


def load_generic_pool(path: str | Path | None = None) -> list[dict]:
    """Load a generic instruction pool (JSONL of prompt/target pairs, with an
    optional stable ``id``); the shipped 200-record stand-in when ``path`` is
    None."""
    if path is None:
        text = (
            resources.files("reaper.data")
            .joinpath("generic_pool.jsonl")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    pool = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        if not record.get("prompt") or not record.get("target"):
            raise ValueError(
                f"generic pool line {line_no}: prompt and target are required"
            )
        pool.append(record)
    return pool


def _ratio(reaper_count: int, generic_count: int) -> str:
    if reaper_count == 0:
        return f"0:{generic_count}"
    return f"1:{generic_count / reaper_count:.1f}"


def mix_dataset(
    reaper_records: Sequence[TrainingRecord],
    generic_pool: Sequence[dict],
    cfg: ForgeConfig,
    seed: int,
) -> tuple[list[TrainingRecord], MixManifest]:
    """Concatenate plan-task records with a seeded sample of the generic pool
    and globally shuffle; deterministic in ``seed``."""
    take = math.floor(cfg.generic_fraction * len(generic_pool))
    if take > len(generic_pool):
        raise ValueError(
            f"generic pool holds {len(generic_pool)} records, need {take}"
        )
    rng = random.Random(seed)
    chosen = rng.sample(range(len(generic_pool)), take)
    generic_records = [
        TrainingRecord(
            prompt=generic_pool[i]["prompt"],
            target=generic_pool[i]["target"],
            task_kind=TaskKind.GENERIC,
            source_id=str(generic_pool[i].get("id", f"gen-{i:04d}")),
        )
        for i in chosen
    ]
    combined = list(reaper_records) + generic_records
    rng.shuffle(combined)
    manifest = MixManifest(
        reaper_count=len(reaper_records),
        generic_count=len(generic_records),
        ratio=_ratio(len(reaper_records), len(generic_records)),
        seed=seed,
    )
    return combined, manifest
