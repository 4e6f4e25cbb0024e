"""Regional chain-of-thought orchestration against an external model.

Two-stage flow: ask the model to detect critical regions as grounded markup,
then ask the original question with the detected regions rendered into the
prompt. When detection yields nothing usable the second stage falls back to
the plain question and the trace records that. The module never hosts a
model; it only drives a transport.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .errors import TransportError, TransportTimeoutError
from .markup import ObjectRegionPair, extract_pairs, parse_grounded_text, render_pair


class ModelTransport(Protocol):
    """Synchronous channel to a model: prompt plus image reference in, text out."""

    def send(self, prompt: str, image_ref: str) -> str: ...


class RetryingTransport:
    """Base for transports that retry failed attempts.

    One logical send makes at most 1 + retries attempts; when all fail the
    last error surfaces as a timeout.
    """

    def __init__(self, timeout: float = 30.0, retries: int = 1):
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        if retries < 0:
            raise ValueError("retries must be non-negative")
        self.timeout = timeout
        self.retries = retries

    def send(self, prompt: str, image_ref: str) -> str:
        last: TransportError | None = None
        for _ in range(1 + self.retries):
            try:
                return self._attempt(prompt, image_ref)
            except TransportError as exc:
                last = exc
        raise TransportTimeoutError(
            f"transport failed after {1 + self.retries} attempts: {last}"
        )

    def _attempt(self, prompt: str, image_ref: str) -> str:
        raise NotImplementedError


class HttpModelTransport(RetryingTransport):
    """POSTs {"prompt", "image"} as JSON and expects {"text": ...} back."""

    def __init__(self, url: str, timeout: float = 30.0, retries: int = 1):
        super().__init__(timeout=timeout, retries=retries)
        self.url = url

    def _attempt(self, prompt: str, image_ref: str) -> str:
        import requests

        try:
            response = requests.post(
                self.url,
                json={"prompt": prompt, "image": image_ref},
                timeout=self.timeout,
            )
            response.raise_for_status()
            data = response.json()
        except requests.RequestException as exc:
            raise TransportError(f"request to {self.url} failed: {exc}") from exc
        except ValueError as exc:
            raise TransportError(f"{self.url} returned invalid JSON: {exc}") from exc
        text = data.get("text") if isinstance(data, dict) else None
        if not isinstance(text, str):
            raise TransportError(f"{self.url} response has no text field")
        return text


class MockTransport:
    """Scripted transport for offline runs and tests.

    The script maps an image reference (or "*" as the catch-all) to the
    sequence of responses for that image; calls past the end repeat the last
    entry. Responses are keyed per image, so interleaving images does not
    change what each one receives.
    """

    def __init__(self, script: Mapping[str, Sequence[str]]):
        cleaned: dict[str, tuple[str, ...]] = {}
        for key, responses in script.items():
            if isinstance(responses, str):
                responses = [responses]
            entries = tuple(responses)
            if not entries or not all(isinstance(r, str) for r in entries):
                raise ValueError(f"mock script entry {key!r} must be strings")
            cleaned[key] = entries
        if not cleaned:
            raise ValueError("mock script is empty")
        self._script = cleaned
        self._calls: dict[str, int] = {}
        self.send_count = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "MockTransport":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError(f"{path}: mock script must be an object")
        return cls(data)

    def send(self, prompt: str, image_ref: str) -> str:
        entries = self._script.get(image_ref)
        if entries is None:
            entries = self._script.get("*")
        if entries is None:
            raise TransportError(f"mock script has no entry for {image_ref!r}")
        index = self._calls.get(image_ref, 0)
        self._calls[image_ref] = index + 1
        self.send_count += 1
        return entries[min(index, len(entries) - 1)]


@dataclass(frozen=True)
class CotConfig:
    """Prompt templates for the two stages.

    detect_template takes {question} and must spell out the <box> output
    format; preamble_template takes {regions} and {question}.
    """

    detect_template: str
    preamble_template: str

    def __post_init__(self):
        if "<box>" not in self.detect_template:
            raise ValueError("detect_template must show the <box> output format")
        for name in ("{regions}", "{question}"):
            if name not in self.preamble_template:
                raise ValueError(f"preamble_template must contain {name}")

    @classmethod
    def for_language(cls, language: str = "en") -> "CotConfig":
        prompts = _default_prompts()
        if language not in prompts:
            raise ValueError(
                f"no default prompts for language {language!r}; "
                f"available: {sorted(prompts)}"
            )
        entry = prompts[language]
        return cls(entry["detect"], entry["preamble"])


@lru_cache(maxsize=1)
def _default_prompts() -> dict:
    source = resources.files("regionkit.data").joinpath("prompts.json")
    return json.loads(source.read_text(encoding="utf-8"))


def _fill(template: str, values: Mapping[str, str]) -> str:
    out = template
    for name, value in values.items():
        out = out.replace("{" + name + "}", value)
    return out


def compose_detect_prompt(task_question: str, config: CotConfig | None = None) -> str:
    """Stage-1 prompt: detect regions, answer only in grounded markup."""
    if config is None:
        config = CotConfig.for_language()
    return _fill(config.detect_template, {"question": task_question})


def compose_final_prompt(
    question: str, regions: Sequence[ObjectRegionPair], config: CotConfig
) -> str:
    """Stage-2 prompt: the question prefixed with every region, canonically."""
    rendered = " ".join(render_pair(pair) for pair in regions)
    return _fill(
        config.preamble_template, {"regions": rendered, "question": question}
    )


@dataclass(frozen=True)
class CotTrace:
    """Everything observed during one two-stage run."""

    question: str
    image_ref: str
    detect_prompt: str
    detect_response: str | None
    parsed_regions: tuple[ObjectRegionPair, ...]
    parse_issue_count: int
    used_fallback: bool
    final_prompt: str | None
    final_response: str | None
    detect_seconds: float | None
    answer_seconds: float | None
    error: str | None = None

    def to_record(self, include_timing: bool = False) -> dict:
        """Flat dict for one-per-line trace logs.

        Timing is off by default so that scripted runs are byte-reproducible.
        """
        record = {
            "question": self.question,
            "image": self.image_ref,
            "detect_prompt": self.detect_prompt,
            "detect_response": self.detect_response,
            "regions": [render_pair(pair) for pair in self.parsed_regions],
            "parse_issues": self.parse_issue_count,
            "fallback": self.used_fallback,
            "final_prompt": self.final_prompt,
            "final_response": self.final_response,
            "error": self.error,
        }
        if include_timing:
            record["detect_seconds"] = self.detect_seconds
            record["answer_seconds"] = self.answer_seconds
        return record


def run_regional_cot(
    question: str,
    image_ref: str,
    transport: ModelTransport,
    config: CotConfig | None = None,
) -> CotTrace:
    """Drive detect-then-answer for one question.

    Exactly two logical transport calls on the happy path. Transport errors
    propagate with the partial trace attached to the exception, so callers
    can log what did happen.
    """
    if config is None:
        config = CotConfig.for_language()
    detect_prompt = compose_detect_prompt(question, config)

    start = time.perf_counter()
    try:
        detect_response = transport.send(detect_prompt, image_ref)
    except TransportError as exc:
        exc.trace = CotTrace(
            question=question,
            image_ref=image_ref,
            detect_prompt=detect_prompt,
            detect_response=None,
            parsed_regions=(),
            parse_issue_count=0,
            used_fallback=False,
            final_prompt=None,
            final_response=None,
            detect_seconds=time.perf_counter() - start,
            answer_seconds=None,
            error=str(exc),
        )
        raise
    detect_seconds = time.perf_counter() - start

    parsed = parse_grounded_text(detect_response)
    regions = extract_pairs(parsed.document)
    if regions:
        final_prompt = compose_final_prompt(question, regions, config)
        used_fallback = False
    else:
        final_prompt = question
        used_fallback = True

    start = time.perf_counter()
    try:
        final_response = transport.send(final_prompt, image_ref)
    except TransportError as exc:
        exc.trace = CotTrace(
            question=question,
            image_ref=image_ref,
            detect_prompt=detect_prompt,
            detect_response=detect_response,
            parsed_regions=regions,
            parse_issue_count=len(parsed.issues),
            used_fallback=used_fallback,
            final_prompt=final_prompt,
            final_response=None,
            detect_seconds=detect_seconds,
            answer_seconds=time.perf_counter() - start,
            error=str(exc),
        )
        raise
    answer_seconds = time.perf_counter() - start

    return CotTrace(
        question=question,
        image_ref=image_ref,
        detect_prompt=detect_prompt,
        detect_response=detect_response,
        parsed_regions=regions,
        parse_issue_count=len(parsed.issues),
        used_fallback=used_fallback,
        final_prompt=final_prompt,
        final_response=final_response,
        detect_seconds=detect_seconds,
        answer_seconds=answer_seconds,
        error=None,
    )
