"""Backends that turn a prompt into plan text.

The scripted stub drives tests and offline demos: it matches known query
substrings against the prompt's input section, so evolved prompts still hit
their fixtures. The remote backend speaks a one-endpoint JSON protocol
(``POST /complete {"prompt", "max_tokens"} -> {"text"}``); the endpoint is
taken from the ``REAPER_BACKEND_URL`` environment variable unless given.

``generate_plan`` composes prompt building, completion, and parsing. Backend
failures (network, bad endpoint) raise :class:`BackendError`; model output
that fails to parse raises :class:`PlanParseError` with the measured latency
attached, so callers can still account for the spent time.
"""

from __future__ import annotations

import os
import time
from typing import Mapping, Protocol

import requests

from .errors import ReaperError
from .plan import Plan, PlanParseError, parse_plan
from .prompt import PromptSpec, build_prompt

BACKEND_URL_ENV = "REAPER_BACKEND_URL"

_INPUT_HEADER = "### Input:"


class BackendError(ReaperError):
    """The completion backend failed; distinct from the model emitting an
    unparseable plan."""


class InvalidFixtureError(ReaperError):
    """A scripted stub was configured with an unparseable plan."""


class PlannerBackend(Protocol):
    def complete(self, prompt: str) -> tuple[str, float]: ...


class ScriptedStub:
    """Deterministic backend: the first table key contained in the prompt's
    input section selects the response; otherwise the default plan."""

    def __init__(
        self,
        table: Mapping[str, str],
        default: str,
        latency_ms: float = 0.0,
    ):
        for key, plan_text in {**dict(table), "<default>": default}.items():
            try:
                parse_plan(plan_text)
            except PlanParseError as exc:
                raise InvalidFixtureError(
                    f"stub entry {key!r} does not parse: {exc}"
                ) from exc
        self._table = dict(table)
        self._default = default
        self.latency_ms = latency_ms

    def complete(self, prompt: str) -> tuple[str, float]:
        # case-insensitive so fixtures keyed on query fragments keep matching
        # however the customer capitalized them
        section = prompt.rsplit(_INPUT_HEADER, 1)[-1].casefold()
        for key, plan_text in self._table.items():
            if key.casefold() in section:
                return plan_text, self.latency_ms
        return self._default, self.latency_ms


def scripted_stub(
    table: Mapping[str, str], default: str, latency_ms: float = 0.0
) -> ScriptedStub:
    return ScriptedStub(table, default, latency_ms)


class RemoteBackend:
    def __init__(
        self,
        base_url: str | None = None,
        max_tokens: int = 512,
        timeout_s: float = 30.0,
    ):
        url = base_url if base_url is not None else os.environ.get(BACKEND_URL_ENV)
        if not url:
            raise BackendError(
                f"no backend URL given and {BACKEND_URL_ENV} is not set"
            )
        self.base_url = url.rstrip("/")
        self.max_tokens = max_tokens
        self.timeout_s = timeout_s

    def complete(self, prompt: str) -> tuple[str, float]:
        started = time.perf_counter()
        try:
            response = requests.post(
                f"{self.base_url}/complete",
                json={"prompt": prompt, "max_tokens": self.max_tokens},
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise BackendError(f"completion call failed: {exc}") from exc
        latency = (time.perf_counter() - started) * 1000.0
        if response.status_code != 200:
            raise BackendError(
                f"completion backend returned HTTP {response.status_code}"
            )
        try:
            text = response.json()["text"]
        except (ValueError, KeyError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc
        if not isinstance(text, str):
            raise BackendError("completion response 'text' must be a string")
        return text, latency


def generate_plan(
    backend: PlannerBackend, spec: PromptSpec
) -> tuple[Plan, float]:
    """Build the prompt, complete it, and parse the result. Returns the plan
    and the end-to-end latency in milliseconds."""
    started = time.perf_counter()
    text, backend_latency = backend.complete(build_prompt(spec))
    overhead = (time.perf_counter() - started) * 1000.0
    latency = max(backend_latency, overhead)
    try:
        plan = parse_plan(text)
    except PlanParseError as exc:
        exc.latency_ms = latency
        raise
    return plan, latency
