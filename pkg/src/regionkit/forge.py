"""Dataset forging: masks plus names become region QA samples and
grounded reports.

Templates are data, not code: structured records with {object} and {box}
placeholders, one per line. Region QA samples come in two directions,
region-to-text (question shows the box, answer names it) and text-to-region
(question names the object, answer localizes it in grounded markup). Report
assembly splits prose into sentences, routes each sentence to the organs it
mentions, and interleaves organ annotations with their descriptions into a
document that always re-parses strictly.
"""

from __future__ import annotations

import enum
import json
import logging
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .errors import (
    EmptyMaskError,
    LexiconError,
    MissingPlaceholderError,
    TemplateDirectionMismatchError,
    TemplateError,
    TransportError,
)
from .geometry import BBox, MaskGrid, mask_to_boxes, normalize_box
from .markup import (
    Annotation,
    GroundedDocument,
    ObjectRegionPair,
    PlainText,
    STRICT,
    parse_grounded_text,
    render_boxes,
)

logger = logging.getLogger(__name__)

# Reserved key for sentences that match no organ surface form.
OTHER_KEY = "other"

_PLACEHOLDER = re.compile(r"\{([^{}]*)\}")
_KNOWN_PLACEHOLDERS = frozenset({"object", "box"})


class Direction(enum.Enum):
    REGION_TO_TEXT = "r2t"
    TEXT_TO_REGION = "t2r"


@dataclass(frozen=True)
class Template:
    """One QA pattern; placeholders are {object} and {box}."""

    id: str
    direction: Direction
    question_pattern: str
    answer_pattern: str

    def __post_init__(self):
        if not self.id:
            raise TemplateError("template id must be non-empty")
        if not isinstance(self.direction, Direction):
            raise TemplateError(f"bad direction {self.direction!r}")
        for field_name in ("question_pattern", "answer_pattern"):
            pattern = getattr(self, field_name)
            if not pattern:
                raise TemplateError(f"template {self.id}: {field_name} is empty")
            for name in _PLACEHOLDER.findall(pattern):
                if name not in _KNOWN_PLACEHOLDERS:
                    raise TemplateError(
                        f"template {self.id}: unknown placeholder {{{name}}}"
                    )
        if self.direction is Direction.TEXT_TO_REGION:
            if "{box}" not in self.answer_pattern:
                raise TemplateError(
                    f"template {self.id}: text-to-region answer needs {{box}}"
                )
        else:
            if "{box}" not in self.question_pattern:
                raise TemplateError(
                    f"template {self.id}: region-to-text question needs {{box}}"
                )


@dataclass(frozen=True)
class ForgedSample:
    """One QA sample produced from a mask."""

    id: str
    image_ref: str
    question: str
    answer: str
    direction: Direction
    source: dict

    def __post_init__(self):
        # Answers carrying markup must survive a strict re-parse.
        if "<box>" in self.answer or "<ref>" in self.answer:
            parse_grounded_text(self.answer, STRICT)


def fill_template(
    template: Template,
    object_text: str,
    boxes: Sequence[BBox] = (),
    expect_direction: Direction | None = None,
) -> tuple[str, str]:
    """Substitute placeholders; returns (question, answer).

    {object} is replaced verbatim, {box} by the canonical markup of all
    boxes. Substitution is single pass, so placeholder-like text inside
    object_text is never re-expanded. The answer is strict-parsed when it
    contains markup.
    """
    if expect_direction is not None and template.direction is not expect_direction:
        raise TemplateDirectionMismatchError(
            f"template {template.id} is {template.direction.value}, "
            f"needed {expect_direction.value}"
        )
    needs_box = (
        "{box}" in template.question_pattern or "{box}" in template.answer_pattern
    )
    if needs_box and not boxes:
        raise MissingPlaceholderError(
            f"template {template.id} has a {{box}} placeholder but no boxes given"
        )
    values = {"object": object_text, "box": render_boxes(boxes)}

    def substitute(pattern: str) -> str:
        return _PLACEHOLDER.sub(lambda m: values[m.group(1)], pattern)

    question = substitute(template.question_pattern)
    answer = substitute(template.answer_pattern)
    if "<box>" in answer or "<ref>" in answer:
        parse_grounded_text(answer, STRICT)
    return question, answer


def load_templates(path: str | Path) -> list[Template]:
    """Read templates from a one-record-per-line file."""
    templates = []
    text = Path(path).read_text(encoding="utf-8")
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
            templates.append(
                Template(
                    id=row["id"],
                    direction=Direction(row["direction"]),
                    question_pattern=row["question_pattern"],
                    answer_pattern=row["answer_pattern"],
                )
            )
        except (KeyError, ValueError) as exc:
            raise TemplateError(f"{path}:{number}: {exc}") from exc
    if not templates:
        raise TemplateError(f"{path}: no templates found")
    return templates


def default_templates(language: str = "en") -> list[Template]:
    """Templates shipped with the package, per language."""
    name = f"{language}.jsonl"
    source = resources.files("regionkit.data.templates").joinpath(name)
    with resources.as_file(source) as path:
        return load_templates(path)


def forge_region_samples(
    mask: MaskGrid,
    label: str,
    templates: Sequence[Template],
    seed: int,
    image_size: tuple[int, int] | None = None,
    image_ref: str = "",
    min_area: int = 4,
    sample_id: str | None = None,
) -> list[ForgedSample]:
    """Produce one region-to-text and one text-to-region sample from a mask.

    All components of the mask become boxes of the single object named by
    label. Template choice is driven only by the seed, so a fixed seed gives
    byte-identical output.
    """
    pixel_boxes = mask_to_boxes(mask, min_area=min_area)
    if not pixel_boxes:
        raise EmptyMaskError(
            f"mask for {label!r} has no component of at least {min_area} pixels"
        )
    width, height = image_size if image_size else (mask.width, mask.height)
    boxes = [normalize_box(b, width, height) for b in pixel_boxes]

    by_direction = {}
    for direction in Direction:
        pool = sorted(
            (t for t in templates if t.direction is direction), key=lambda t: t.id
        )
        if not pool:
            raise TemplateError(f"no template for direction {direction.value}")
        by_direction[direction] = pool

    rng = random.Random(seed)
    base = sample_id if sample_id is not None else label
    samples = []
    for direction in (Direction.REGION_TO_TEXT, Direction.TEXT_TO_REGION):
        template = rng.choice(by_direction[direction])
        question, answer = fill_template(template, label, boxes, direction)
        samples.append(
            ForgedSample(
                id=f"{base}-{direction.value}",
                image_ref=image_ref,
                question=question,
                answer=answer,
                direction=direction,
                source={
                    "label": label,
                    "template_id": template.id,
                    "boxes": [b.as_tuple() for b in boxes],
                },
            )
        )
    return samples


class OrganLexicon:
    """Organ names with their textual surface forms, bilingual."""

    def __init__(self, entries: Mapping[str, Sequence[str]]):
        cleaned: dict[str, tuple[str, ...]] = {}
        for organ, forms in entries.items():
            if not organ or not isinstance(organ, str):
                raise LexiconError(f"bad organ name {organ!r}")
            normalized = tuple(
                form.strip().lower() for form in forms if form and form.strip()
            )
            if not normalized:
                raise LexiconError(f"organ {organ!r} has no surface forms")
            cleaned[organ] = normalized
        if not cleaned:
            raise LexiconError("lexicon is empty")
        if OTHER_KEY in cleaned:
            raise LexiconError(f"{OTHER_KEY!r} is reserved")
        self._entries = cleaned

    @property
    def organs(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def surface_forms(self, organ: str) -> tuple[str, ...]:
        return self._entries[organ]

    def match(self, sentence: str) -> list[str]:
        """Organs whose surface form occurs in the sentence, lexicon order."""
        lowered = sentence.lower()
        return [
            organ
            for organ, forms in self._entries.items()
            if any(form in lowered for form in forms)
        ]

    @classmethod
    def from_file(cls, path: str | Path) -> "OrganLexicon":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise LexiconError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise LexiconError(f"{path}: expected an object of organ -> forms")
        return cls(data)


def default_lexicon() -> OrganLexicon:
    """The 12 standardized chest structures shipped with the package."""
    source = resources.files("regionkit.data").joinpath("chest_structures.json")
    with resources.as_file(source) as path:
        return OrganLexicon.from_file(path)


def split_sentences(text: str) -> list[str]:
    """Split on sentence periods, protecting decimal points."""
    sentences = []
    buffer: list[str] = []
    for index, ch in enumerate(text):
        buffer.append(ch)
        if ch == "。":
            sentences.append("".join(buffer))
            buffer = []
        elif ch == ".":
            prev_digit = index > 0 and text[index - 1].isdigit()
            next_digit = index + 1 < len(text) and text[index + 1].isdigit()
            if not (prev_digit and next_digit):
                sentences.append("".join(buffer))
                buffer = []
    if buffer:
        sentences.append("".join(buffer))
    return [s.strip() for s in sentences if s.strip()]


def _join_sentences(sentences: Sequence[str]) -> str:
    parts = []
    for sentence in sentences:
        parts.append(sentence)
        # CJK sentence enders need no space before the next sentence.
        parts.append("" if sentence.endswith("。") else " ")
    return "".join(parts).rstrip()


def segment_report(report: str, lexicon: OrganLexicon) -> dict[str, str]:
    """Route every sentence of a report to the organs it mentions.

    A sentence that names several organs appears under each of them; a
    sentence naming none lands under the reserved "other" key. Keys follow
    lexicon order with "other" last, and values preserve sentence order.
    """
    buckets: dict[str, list[str]] = {organ: [] for organ in lexicon.organs}
    buckets[OTHER_KEY] = []
    for sentence in split_sentences(report):
        organs = lexicon.match(sentence) or [OTHER_KEY]
        for organ in organs:
            buckets[organ].append(sentence)
    return {
        organ: _join_sentences(sentences)
        for organ, sentences in buckets.items()
        if sentences
    }


class SegmenterClient(Protocol):
    """External service that splits a report into per-organ descriptions."""

    def segment(self, report: str, organs: Sequence[str]) -> Mapping[str, str]: ...


class HttpSegmenterClient:
    """Talks to a remote segmenter over HTTP POST.

    Sends {"report": ..., "organ_list": [...]} and expects a JSON object
    mapping organ names to descriptions. Makes at most 1 + retries attempts.
    """

    def __init__(self, url: str, timeout: float = 10.0, retries: int = 1):
        if retries < 0:
            raise ValueError("retries must be non-negative")
        self.url = url
        self.timeout = timeout
        self.retries = retries

    def segment(self, report: str, organs: Sequence[str]) -> Mapping[str, str]:
        import requests

        payload = {"report": report, "organ_list": list(organs)}
        last_error: Exception | None = None
        for _ in range(1 + self.retries):
            try:
                response = requests.post(
                    self.url, json=payload, timeout=self.timeout
                )
                response.raise_for_status()
                return response.json()
            except requests.RequestException as exc:
                last_error = exc
        raise TransportError(
            f"segmenter at {self.url} failed after {1 + self.retries} attempts: "
            f"{last_error}"
        )


def segment_report_with_fallback(
    report: str,
    lexicon: OrganLexicon,
    client: SegmenterClient | None = None,
) -> dict[str, str]:
    """Prefer the external segmenter, fall back to the rule-based one."""
    if client is not None:
        try:
            result = client.segment(report, list(lexicon.organs))
            if not isinstance(result, Mapping) or not result:
                raise ValueError(f"segmenter returned {type(result).__name__}")
            cleaned = {}
            for organ, description in result.items():
                if not isinstance(organ, str) or not isinstance(description, str):
                    raise ValueError("segmenter map must be string -> string")
                if description.strip():
                    cleaned[organ] = description
            if cleaned:
                return cleaned
            raise ValueError("segmenter returned only empty descriptions")
        except Exception as exc:
            logger.warning("external segmenter failed, using rules: %s", exc)
    return segment_report(report, lexicon)


@dataclass(frozen=True)
class AssembledReport:
    """A grounded report plus organs whose regions found no description."""

    document: GroundedDocument
    missing_descriptions: tuple[str, ...]


def assemble_grounded_report(
    descriptions: Mapping[str, str],
    regions: Mapping[str, Sequence[BBox]],
    order: Sequence[str] | None = None,
) -> AssembledReport:
    """Interleave organ annotations with their descriptions.

    Organs carrying both a description and regions become an annotation
    followed by the prose; description-only organs contribute prose alone.
    Regions whose organ has no description are dropped and reported in
    missing_descriptions. The output always re-parses strictly.
    """
    if order is not None:
        listed = [o for o in order if o in descriptions]
        seen = set(listed)
        ordered = listed + [o for o in descriptions if o not in seen]
    else:
        ordered = list(descriptions)

    segments: list = []
    plain: list[str] = []
    grounded: set[str] = set()

    def flush():
        if plain:
            segments.append(PlainText("".join(plain)))
            plain.clear()

    for organ in ordered:
        description = descriptions[organ].strip()
        if not description:
            continue
        boxes = tuple(regions.get(organ) or ())
        if boxes:
            if plain:
                plain.append(" ")
            flush()
            segments.append(Annotation(ObjectRegionPair(organ, boxes)))
            grounded.add(organ)
            plain.append(" " + description)
        else:
            plain.append((" " if plain else "") + description)
    flush()

    missing = tuple(
        organ
        for organ, boxes in regions.items()
        if boxes and organ not in grounded
    )
    return AssembledReport(GroundedDocument(tuple(segments)), missing)


def load_mask(path: str | Path) -> MaskGrid:
    """Load a mask from .npy or any common image format."""
    path = Path(path)
    if path.suffix.lower() == ".npy":
        return MaskGrid.from_array(np.load(path))
    from PIL import Image

    with Image.open(path) as image:
        return MaskGrid.from_array(np.asarray(image.convert("L")))
