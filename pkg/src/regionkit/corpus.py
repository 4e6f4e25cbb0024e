"""Corpus records, file I/O, and layered run configuration.

Corpora are one JSON record per line. Configuration resolves in precedence
order: command-line flag, then REGIONKIT_* environment variable, then config
file entry, then the built-in default.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigError, CorpusError
from .markup import MODES
from .region_eval import normalize_object_text

TASKS = ("r2t", "t2r", "grounded_report", "vqa", "report")
LANGUAGES = ("en", "zh")
ENV_PREFIX = "REGIONKIT_"


@dataclass(frozen=True)
class CorpusRecord:
    """One evaluation unit: a prediction and its reference for some task."""

    id: str
    task: str
    language: str = "en"
    image: str | None = None
    prediction: str = ""
    reference: str = ""
    closed: bool | None = None
    question: str | None = None

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise CorpusError(f"record id must be a non-empty string, got {self.id!r}")
        if self.task not in TASKS:
            raise CorpusError(
                f"record {self.id}: task must be one of {TASKS}, got {self.task!r}"
            )
        if self.language not in LANGUAGES:
            raise CorpusError(
                f"record {self.id}: language must be one of {LANGUAGES}, "
                f"got {self.language!r}"
            )
        for name in ("prediction", "reference"):
            if not isinstance(getattr(self, name), str):
                raise CorpusError(f"record {self.id}: {name} must be a string")
        if self.closed is not None and not isinstance(self.closed, bool):
            raise CorpusError(f"record {self.id}: closed must be a boolean")

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "CorpusRecord":
        if not isinstance(data, Mapping):
            raise CorpusError(f"record must be an object, got {type(data).__name__}")
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in known}
        missing = {"id", "task"} - set(kwargs)
        if missing:
            raise CorpusError(f"record missing fields: {sorted(missing)}")
        return cls(**kwargs)

    def to_json_dict(self) -> dict:
        out = {"id": self.id, "task": self.task, "language": self.language}
        for name in ("image", "question"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        out["prediction"] = self.prediction
        out["reference"] = self.reference
        if self.closed is not None:
            out["closed"] = self.closed
        return out


def read_corpus(path: str | Path) -> list[CorpusRecord]:
    """Read a one-record-per-line corpus; problems name the offending line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    records = []
    seen: set[str] = set()
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = CorpusRecord.from_json_dict(json.loads(line))
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}:{number}: invalid JSON: {exc}") from exc
        except CorpusError as exc:
            raise CorpusError(f"{path}:{number}: {exc}") from exc
        if record.id in seen:
            raise CorpusError(f"{path}:{number}: duplicate record id {record.id!r}")
        seen.add(record.id)
        records.append(record)
    return records


def write_corpus(records: Sequence[CorpusRecord], path: str | Path):
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_json_dict(), ensure_ascii=False))
            handle.write("\n")


def load_synonyms(path: str | Path) -> dict[str, str]:
    """Load an object-text synonym map; both sides are normalized."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load synonyms from {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: synonym map must be an object")
    synonyms = {}
    for key, value in data.items():
        if not isinstance(key, str) or not isinstance(value, str):
            raise ConfigError(f"{path}: synonym entries must be string -> string")
        synonyms[normalize_object_text(key)] = normalize_object_text(value)
    return synonyms


@dataclass(frozen=True)
class RunConfig:
    """Everything a batch command needs beyond its input and output paths."""

    task: str = "auto"
    iou_threshold: float = 0.5
    mode: str = "lenient"
    language: str = "en"
    synonyms: str | None = None
    jobs: int = 1
    seed: int = 0
    templates: str | None = None
    lexicon: str | None = None
    endpoint: str | None = None
    mock: str | None = None
    figures: str | None = None
    timing: bool = False

    def __post_init__(self):
        if self.task != "auto" and self.task not in TASKS:
            raise ConfigError(f"task must be auto or one of {TASKS}, got {self.task!r}")
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ConfigError(
                f"iou_threshold must be in (0, 1], got {self.iou_threshold}"
            )
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.language not in LANGUAGES:
            raise ConfigError(
                f"language must be one of {LANGUAGES}, got {self.language!r}"
            )
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if name in ("jobs", "seed"):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{name} expects an integer, got {raw!r}") from exc
    if name == "iou_threshold":
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{name} expects a number, got {raw!r}") from exc
    if name == "timing":
        lowered = raw.strip().lower()
        if lowered in _BOOL_TRUE:
            return True
        if lowered in _BOOL_FALSE:
            return False
        raise ConfigError(f"{name} expects a boolean, got {raw!r}")
    del kind
    return raw


def load_config_file(path: str | Path) -> dict[str, object]:
    """Parse a flat key = value config file; keys match flag names."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values: dict[str, object] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{number}: expected key = value")
        key, _, raw = stripped.partition("=")
        name = key.strip().replace("-", "_")
        if name not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{number}: unknown setting {key.strip()!r}")
        values[name] = _coerce(name, raw.strip())
    return values


def resolve_config(
    cli_values: Mapping[str, object] | None = None,
    env: Mapping[str, str] | None = None,
    config_path: str | Path | None = None,
) -> RunConfig:
    """Merge defaults, config file, environment, and flags into a RunConfig."""
    merged: dict[str, object] = {}
    if config_path is not None:
        merged.update(load_config_file(config_path))
    if env:
        for name in _FIELD_TYPES:
            raw = env.get(ENV_PREFIX + name.upper())
            if raw is not None:
                merged[name] = _coerce(name, raw)
    if cli_values:
        for name, value in cli_values.items():
            if name not in _FIELD_TYPES:
                raise ConfigError(f"unknown setting {name!r}")
            if value is not None:
                merged[name] = value
    return RunConfig(**merged)
