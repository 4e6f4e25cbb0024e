"""Grounded-markup parsing and serialization.

A grounded document interleaves plain prose with annotations of the form

    <ref>NAME</ref><box>[x1, y1, x2, y2]</box><box>...</box>

where every box belongs to the nearest preceding ref and only whitespace may
sit between the tokens of one annotation. Coordinates are integers on the
normalized grid (see geometry). Serialization is canonical: one space after
each comma, no space inside brackets, no leading zeros, no gap between the
ref and its boxes. parse(serialize(doc)) == doc for any valid document.

Lenient parsing never raises on bad markup: offending fragments are kept as
plain text, each with a ParseIssue, so no visible content is lost. Strict
parsing raises on the first issue instead.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Union

from .errors import (
    DanglingBoxError,
    InvalidBoxError,
    MalformedBoxError,
    MarkupError,
    RefWithoutBoxError,
    UnclosedTagError,
)
from .geometry import BBox

LENIENT = "lenient"
STRICT = "strict"
MODES = (LENIENT, STRICT)

ISSUE_MALFORMED_BOX = "malformed_box"
ISSUE_DANGLING_BOX = "dangling_box"
ISSUE_UNCLOSED_TAG = "unclosed_tag"
ISSUE_REF_WITHOUT_BOX = "ref_without_box"
ISSUE_KINDS = (
    ISSUE_MALFORMED_BOX,
    ISSUE_DANGLING_BOX,
    ISSUE_UNCLOSED_TAG,
    ISSUE_REF_WITHOUT_BOX,
)

_ISSUE_EXCEPTIONS: dict[str, type[MarkupError]] = {
    ISSUE_MALFORMED_BOX: MalformedBoxError,
    ISSUE_DANGLING_BOX: DanglingBoxError,
    ISSUE_UNCLOSED_TAG: UnclosedTagError,
    ISSUE_REF_WITHOUT_BOX: RefWithoutBoxError,
}

_OPEN_TAG = re.compile(r"<ref>|<box>")
_NAME_STOP = re.compile(r"</ref>|<ref>|<box>")
_BOX_PAYLOAD = re.compile(
    r"\s*\[\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\]\s*\Z"
)
_DESCRIPTION_LEAD = " \t\r\n.,;:。，；：、"


@dataclass(frozen=True)
class ObjectRegionPair:
    """One named object with the regions grounding it.

    description is derived context (the prose following the annotation); it is
    populated by extract_pairs, never serialized, and ignored by region
    matching.
    """

    object_text: str
    regions: tuple[BBox, ...]
    description: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.object_text.strip():
            raise ValueError("object_text must be non-empty after trimming")
        if not self.regions:
            raise ValueError(f"pair {self.object_text!r} has no regions")
        for region in self.regions:
            if not isinstance(region, BBox):
                raise TypeError(f"regions must be BBox, got {region!r}")


@dataclass(frozen=True)
class PlainText:
    """A run of prose between annotations."""

    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("plain segment must be non-empty")


@dataclass(frozen=True)
class Annotation:
    """A ref plus its boxes, occupying one span of the document."""

    pair: ObjectRegionPair


Segment = Union[PlainText, Annotation]


@dataclass(frozen=True)
class GroundedDocument:
    """Ordered segments of a grounded report.

    Adjacent plain segments are forbidden so that serialization followed by
    parsing reproduces the exact segment structure.
    """

    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        previous_plain = False
        for segment in self.segments:
            if isinstance(segment, PlainText):
                if previous_plain:
                    raise ValueError("adjacent plain segments must be merged")
                previous_plain = True
            elif isinstance(segment, Annotation):
                previous_plain = False
            else:
                raise TypeError(f"unsupported segment {segment!r}")

    @property
    def pairs(self) -> tuple[ObjectRegionPair, ...]:
        return tuple(
            segment.pair for segment in self.segments if isinstance(segment, Annotation)
        )


@dataclass(frozen=True)
class ParseIssue:
    """One recoverable problem found while parsing.

    kind is one of ISSUE_KINDS, position is the character offset of the
    offending token, fragment is the raw text that was kept as prose.
    """

    kind: str
    position: int
    fragment: str
    message: str


@dataclass(frozen=True)
class ParseResult:
    document: GroundedDocument
    issues: tuple[ParseIssue, ...] = field(default=())


def render_boxes(boxes) -> str:
    """Canonical <box> markup for a sequence of boxes."""
    return "".join(
        f"<box>[{b.x1}, {b.y1}, {b.x2}, {b.y2}]</box>" for b in boxes
    )


def render_pair(pair: ObjectRegionPair) -> str:
    """Canonical annotation markup for one pair; description is not emitted."""
    return f"<ref>{pair.object_text}</ref>{render_boxes(pair.regions)}"


def serialize_grounded_text(document: GroundedDocument) -> str:
    parts = []
    for segment in document.segments:
        if isinstance(segment, PlainText):
            parts.append(segment.text)
        else:
            parts.append(render_pair(segment.pair))
    return "".join(parts)


class _Parser:
    def __init__(self, text: str, mode: str):
        self.text = text
        self.mode = mode
        self.segments: list[Segment] = []
        self.issues: list[ParseIssue] = []
        self._plain: list[str] = []

    def run(self) -> ParseResult:
        text = self.text
        pos = 0
        while pos < len(text):
            match = _OPEN_TAG.search(text, pos)
            if match is None:
                self._plain.append(text[pos:])
                break
            if match.start() > pos:
                self._plain.append(text[pos : match.start()])
            if match.group() == "<ref>":
                pos = self._scan_ref(match.start())
            else:
                pos = self._scan_dangling_box(match.start())
        self._flush_plain()
        return ParseResult(GroundedDocument(tuple(self.segments)), tuple(self.issues))

    def _flush_plain(self):
        if self._plain:
            joined = "".join(self._plain)
            self._plain.clear()
            if joined:
                self.segments.append(PlainText(joined))

    def _report(self, kind: str, position: int, fragment: str, message: str):
        if self.mode == STRICT:
            raise _ISSUE_EXCEPTIONS[kind](message, position, fragment)
        self.issues.append(ParseIssue(kind, position, fragment, message))

    def _scan_ref(self, start: int) -> int:
        text = self.text
        name_start = start + len("<ref>")
        stop = _NAME_STOP.search(text, name_start)
        if stop is None or stop.group() != "</ref>":
            self._report(
                ISSUE_UNCLOSED_TAG,
                start,
                "<ref>",
                f"unclosed <ref> tag at offset {start}",
            )
            self._plain.append("<ref>")
            return name_start

        name = text[name_start : stop.start()]
        ref_raw = text[start : stop.end()]
        if not name.strip():
            self._report(
                ISSUE_REF_WITHOUT_BOX,
                start,
                ref_raw,
                f"ref at offset {start} has an empty name",
            )
            self._plain.append(ref_raw)
            return stop.end()

        boxes: list[BBox] = []
        pos = stop.end()
        while True:
            probe = pos
            while probe < len(text) and text[probe].isspace():
                probe += 1
            if not text.startswith("<box>", probe):
                break
            status, box, raw, new_pos = self._scan_box(probe)
            if status == "ok":
                boxes.append(box)
                pos = new_pos
                continue
            # Bad box: close the group here so original order is preserved.
            self._emit_group(name, boxes, start, ref_raw)
            self._plain.append(raw)
            return new_pos
        self._emit_group(name, boxes, start, ref_raw)
        return pos

    def _emit_group(self, name: str, boxes: list[BBox], start: int, ref_raw: str):
        if boxes:
            self._flush_plain()
            self.segments.append(Annotation(ObjectRegionPair(name, tuple(boxes))))
        else:
            self._report(
                ISSUE_REF_WITHOUT_BOX,
                start,
                ref_raw,
                f"ref {name.strip()!r} at offset {start} has no usable box",
            )
            self._plain.append(ref_raw)

    def _scan_dangling_box(self, start: int) -> int:
        status, _, raw, new_pos = self._scan_box(start, report_malformed=False)
        if status == "unclosed":
            self._plain.append(raw)
            return new_pos
        self._report(
            ISSUE_DANGLING_BOX,
            start,
            raw,
            f"box at offset {start} has no preceding ref",
        )
        self._plain.append(raw)
        return new_pos

    def _scan_box(self, start: int, report_malformed: bool = True):
        """Scan one <box> element starting at `start`.

        Returns (status, box, raw, new_pos) where status is "ok", "malformed"
        or "unclosed". On "unclosed" raw is the literal "<box>" token and
        new_pos sits just past it, so the caller keeps the token as plain
        text and the inner content is rescanned.
        """
        text = self.text
        inner_start = start + len("<box>")
        close = text.find("</box>", inner_start)
        nested = _OPEN_TAG.search(text, inner_start)
        if close < 0 or (nested is not None and nested.start() < close):
            self._report(
                ISSUE_UNCLOSED_TAG,
                start,
                "<box>",
                f"unclosed <box> tag at offset {start}",
            )
            return "unclosed", None, "<box>", inner_start

        new_pos = close + len("</box>")
        raw = text[start:new_pos]
        payload = _BOX_PAYLOAD.fullmatch(text[inner_start:close])
        if payload is not None:
            try:
                box = BBox(*(int(group) for group in payload.groups()))
            except InvalidBoxError as exc:
                reason = str(exc)
            else:
                return "ok", box, raw, new_pos
        else:
            reason = "payload is not four comma-separated integers"
        if report_malformed:
            self._report(
                ISSUE_MALFORMED_BOX,
                start,
                raw,
                f"malformed box at offset {start}: {reason}",
            )
        return "malformed", None, raw, new_pos


def parse_grounded_text(text: str, mode: str = LENIENT) -> ParseResult:
    """Parse grounded markup into a document plus any recoverable issues.

    In strict mode the first problem raises the matching MarkupError subclass;
    in lenient mode problems are recorded as issues and the offending text is
    preserved verbatim as prose.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return _Parser(text, mode).run()


def _clean_description(text: str) -> str | None:
    cleaned = text.lstrip(_DESCRIPTION_LEAD).rstrip()
    return cleaned or None


def extract_pairs(document: GroundedDocument) -> tuple[ObjectRegionPair, ...]:
    """Annotation pairs in order, each with its trailing prose as description.

    The description is the plain text between an annotation and the next one
    (or the end), with leading separators stripped. Pairs with no trailing
    prose keep description None.
    """
    segments = document.segments
    pairs = []
    for index, segment in enumerate(segments):
        if not isinstance(segment, Annotation):
            continue
        description = None
        if index + 1 < len(segments) and isinstance(segments[index + 1], PlainText):
            description = _clean_description(segments[index + 1].text)
        pairs.append(replace(segment.pair, description=description))
    return tuple(pairs)


def parse_pairs(text: str, mode: str = LENIENT) -> tuple[ObjectRegionPair, ...]:
    """Shortcut: parse markup and return its pairs with descriptions."""
    return extract_pairs(parse_grounded_text(text, mode).document)
