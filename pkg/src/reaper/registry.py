"""Tool registry: canonical tool specs, name/description variant pools, lookup.

The registry is loaded from a YAML document (see ``data/default_tools.yaml``)
and is immutable afterwards. Every tool carries a pool of alternative names
and description paraphrases used by the prompt-evolution stage, and a
``class_label`` tying it to one of the evaluation classes.

YAML schema (all fields required unless noted)::

    tools:
      - canonical_name: prod_qna
        class_label: product_qna
        description: one-sentence canonical description
        params:
          - {name: product_id, required: true, description: ...}
        example_usage: 'Step 1: prod_qna(product_id="B0X", query="...")'
        name_variants: [prod_qna, product_information, ...]   # includes canonical
        description_paraphrases: [..., ...]                   # non-empty
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

import yaml

from .errors import ReaperError, UnknownToolError
from .plan import IDENT_RE, parse_plan

NO_RETRIEVAL_TOOL = "no_retrieval"

CLASS_LABELS = (
    "customer_support",
    "shipment_status",
    "product_search",
    "product_qna",
    "review_summary",
    "no_retrieval",
    "extension",
)


class SchemaError(ReaperError):
    """Registry config file does not match the schema."""

    def __init__(self, path: str, field: str, message: str):
        super().__init__(f"{path}: {field}: {message}")
        self.path = path
        self.field = field


class AmbiguousVariantError(ReaperError):
    """Two tools claim the same name variant."""


@dataclass(frozen=True)
class ParamSpec:
    name: str
    required: bool
    description: str = ""


@dataclass(frozen=True)
class ToolSpec:
    canonical_name: str
    params: tuple[ParamSpec, ...]
    description: str
    example_usage: str
    class_label: str

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if not IDENT_RE.match(self.canonical_name):
            raise ValueError(f"invalid tool name: {self.canonical_name!r}")
        if self.class_label not in CLASS_LABELS:
            raise ValueError(
                f"{self.canonical_name}: unknown class_label {self.class_label!r}"
            )
        seen_optional = False
        for param in self.params:
            if param.required and seen_optional:
                raise ValueError(
                    f"{self.canonical_name}: required parameter {param.name!r} "
                    "listed after an optional one"
                )
            seen_optional = seen_optional or not param.required
        parse_plan(self.example_usage)  # must be a valid plan snippet

    def required_params(self) -> tuple[ParamSpec, ...]:
        return tuple(p for p in self.params if p.required)


@dataclass(frozen=True)
class VariantPool:
    name_variants: tuple[str, ...]
    description_paraphrases: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "name_variants", tuple(self.name_variants))
        object.__setattr__(
            self, "description_paraphrases", tuple(self.description_paraphrases)
        )
        if not self.name_variants or not self.description_paraphrases:
            raise ValueError("variant pools must be non-empty")
        for name in self.name_variants:
            if not IDENT_RE.match(name):
                raise ValueError(f"invalid variant name: {name!r}")
        if len(set(self.name_variants)) != len(self.name_variants):
            raise ValueError("duplicate names within a variant pool")


class ToolRegistry:
    """Immutable, ordered collection of (ToolSpec, VariantPool) entries."""

    def __init__(self, entries: Iterable[tuple[ToolSpec, VariantPool]]):
        self._entries: dict[str, tuple[ToolSpec, VariantPool]] = {}
        self._variant_to_canonical: dict[str, str] = {}
        for spec, pool in entries:
            if spec.canonical_name in self._entries:
                raise ValueError(f"duplicate tool: {spec.canonical_name!r}")
            if spec.canonical_name not in pool.name_variants:
                raise ValueError(
                    f"{spec.canonical_name}: canonical name missing from its "
                    "variant pool"
                )
            for variant in pool.name_variants:
                owner = self._variant_to_canonical.get(variant)
                if owner is not None and owner != spec.canonical_name:
                    raise AmbiguousVariantError(
                        f"variant {variant!r} claimed by both {owner!r} "
                        f"and {spec.canonical_name!r}"
                    )
                self._variant_to_canonical[variant] = spec.canonical_name
            self._entries[spec.canonical_name] = (spec, pool)

    @property
    def canonical_names(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[ToolSpec]:
        return (spec for spec, _ in self._entries.values())

    def has_tool(self, name: str) -> bool:
        return name in self._variant_to_canonical

    def canonical_of(self, name: str) -> str:
        try:
            return self._variant_to_canonical[name]
        except KeyError:
            raise UnknownToolError(name) from None

    def resolve(self, name: str) -> ToolSpec:
        return self._entries[self.canonical_of(name)][0]

    def entry(self, canonical_name: str) -> tuple[ToolSpec, VariantPool]:
        try:
            return self._entries[canonical_name]
        except KeyError:
            raise UnknownToolError(canonical_name) from None

    def variants_of(self, name: str) -> tuple[str, ...]:
        return self._entries[self.canonical_of(name)][1].name_variants

    def subset(self, canonical_names: Iterable[str]) -> "ToolRegistry":
        """New registry keeping the named tools, in this registry's order."""
        keep = set(canonical_names)
        unknown = keep - set(self._entries)
        if unknown:
            raise UnknownToolError(sorted(unknown)[0])
        return ToolRegistry(
            self._entries[name] for name in self._entries if name in keep
        )

    def without(self, name: str) -> "ToolRegistry":
        canonical = self.canonical_of(name)
        return ToolRegistry(
            entry for key, entry in self._entries.items() if key != canonical
        )


def subset_with(
    registry: ToolRegistry,
    required: Iterable[str],
    extra_count: int,
    seed: int,
) -> ToolRegistry:
    """Registry containing exactly ``required`` plus ``extra_count`` tools
    drawn without replacement from the remainder, deterministically by seed."""
    wanted = {registry.canonical_of(name) for name in required}
    remainder = [n for n in registry.canonical_names if n not in wanted]
    if not 0 <= extra_count <= len(remainder):
        raise ValueError(
            f"extra_count must be in [0, {len(remainder)}], got {extra_count}"
        )
    extras = set(random.Random(seed).sample(remainder, extra_count))
    return registry.subset(wanted | extras)


def _field(mapping: dict, key: str, kind: type, path: str, where: str):
    if key not in mapping:
        raise SchemaError(path, f"{where}.{key}", "missing field")
    value = mapping[key]
    if kind is bool and not isinstance(value, bool):
        raise SchemaError(path, f"{where}.{key}", "expected a boolean")
    if kind is str and not isinstance(value, str):
        raise SchemaError(path, f"{where}.{key}", "expected a string")
    if kind is list and not isinstance(value, list):
        raise SchemaError(path, f"{where}.{key}", "expected a list")
    return value


def _load_registry_data(data: object, path: str) -> ToolRegistry:
    if not isinstance(data, dict) or "tools" not in data:
        raise SchemaError(path, "tools", "document must be a mapping with 'tools'")
    tools = data["tools"]
    if not isinstance(tools, list) or not tools:
        raise SchemaError(path, "tools", "expected a non-empty list")
    entries = []
    for i, block in enumerate(tools):
        where = f"tools[{i}]"
        if not isinstance(block, dict):
            raise SchemaError(path, where, "expected a mapping")
        params = []
        for j, p in enumerate(_field(block, "params", list, path, where)):
            pwhere = f"{where}.params[{j}]"
            if not isinstance(p, dict):
                raise SchemaError(path, pwhere, "expected a mapping")
            params.append(
                ParamSpec(
                    name=_field(p, "name", str, path, pwhere),
                    required=_field(p, "required", bool, path, pwhere),
                    description=_field(p, "description", str, path, pwhere),
                )
            )
        try:
            spec = ToolSpec(
                canonical_name=_field(block, "canonical_name", str, path, where),
                params=tuple(params),
                description=_field(block, "description", str, path, where),
                example_usage=_field(block, "example_usage", str, path, where),
                class_label=_field(block, "class_label", str, path, where),
            )
            pool = VariantPool(
                name_variants=tuple(
                    _field(block, "name_variants", list, path, where)
                ),
                description_paraphrases=tuple(
                    _field(block, "description_paraphrases", list, path, where)
                ),
            )
        except (ValueError, ReaperError) as exc:
            if isinstance(exc, (SchemaError, AmbiguousVariantError)):
                raise
            raise SchemaError(path, where, str(exc)) from exc
        entries.append((spec, pool))
    return ToolRegistry(entries)


def load_registry(path: str | Path) -> ToolRegistry:
    """Load a registry config file; raises :class:`SchemaError` on malformed
    config and :class:`AmbiguousVariantError` on variant collisions."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(str(path), "-", f"not valid YAML: {exc}") from exc
    return _load_registry_data(data, str(path))


def _packaged(name: str) -> ToolRegistry:
    text = resources.files("reaper.data").joinpath(name).read_text(encoding="utf-8")
    return _load_registry_data(yaml.safe_load(text), f"reaper/data/{name}")


def default_registry() -> ToolRegistry:
    """The shipped six-tool registry covering the six evaluation classes."""
    return _packaged("default_tools.yaml")


def extended_registry() -> ToolRegistry:
    """Default registry plus the two extension tools."""
    return _packaged("extended_tools.yaml")
