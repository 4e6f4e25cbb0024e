"""Region-aligned evaluation of grounded predictions.

Every (object, box) unit of the prediction is matched one-to-one against the
reference units by maximizing total IoU. A matched unit counts as object
correct when the normalized object texts agree, region correct when its IoU
reaches the threshold, and aligned when both hold. Precision divides by the
number of predicted units, recall by the number of reference units, and each
F1 is the harmonic mean. mean_iou sums matched IoU over max(N, M), so
spurious and missing regions both dilute it.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .assignment import ScoreMatrix, hungarian_match
from .errors import EmptyCorpusError, EmptyReferenceError
from .geometry import BBox, iou
from .markup import ObjectRegionPair

_WHITESPACE = re.compile(r"\s+")


class TaskKind(enum.Enum):
    """Shape of a reference: how many objects, and regions per object."""

    SINGLE_OBJECT_SINGLE_REGION = "single_object_single_region"
    SINGLE_OBJECT_MULTI_REGION = "single_object_multi_region"
    MULTI_OBJECT_SINGLE_REGION = "multi_object_single_region"
    MULTI_OBJECT_MULTI_REGION = "multi_object_multi_region"


def normalize_object_text(text: str, synonyms: Mapping[str, str] | None = None) -> str:
    """Lowercase, trim, collapse runs of whitespace, then map through synonyms."""
    normalized = _WHITESPACE.sub(" ", text.strip().lower())
    if synonyms:
        normalized = synonyms.get(normalized, normalized)
    return normalized


def _flatten(
    pairs: Iterable[ObjectRegionPair], synonyms: Mapping[str, str] | None
) -> list[tuple[str, BBox]]:
    units = []
    for pair in pairs:
        text = normalize_object_text(pair.object_text, synonyms)
        for region in pair.regions:
            units.append((text, region))
    return units


def classify_task(
    reference: Sequence[ObjectRegionPair],
    synonyms: Mapping[str, str] | None = None,
) -> TaskKind:
    """Classify a reference by object count and regions per object."""
    if not reference:
        raise EmptyReferenceError("reference has no object-region pairs")
    regions_per_object: dict[str, int] = {}
    for pair in reference:
        text = normalize_object_text(pair.object_text, synonyms)
        regions_per_object[text] = regions_per_object.get(text, 0) + len(pair.regions)
    single_object = len(regions_per_object) == 1
    single_region = all(count == 1 for count in regions_per_object.values())
    if single_object:
        if single_region:
            return TaskKind.SINGLE_OBJECT_SINGLE_REGION
        return TaskKind.SINGLE_OBJECT_MULTI_REGION
    if single_region:
        return TaskKind.MULTI_OBJECT_SINGLE_REGION
    return TaskKind.MULTI_OBJECT_MULTI_REGION


@dataclass(frozen=True)
class SampleMetrics:
    """Per-sample region metrics; ratios in [0, 1].

    region_accuracy is populated only for single-object single-region
    references (did the one predicted region hit the one true region).
    """

    task_kind: TaskKind
    n_predicted: int
    m_reference: int
    detected_objects: int
    detected_regions: int
    aligned_pairs: int
    object_precision: float
    object_recall: float
    object_f1: float
    region_precision: float
    region_recall: float
    region_f1: float
    alignment_precision: float
    alignment_recall: float
    alignment_f1: float
    mean_iou: float
    region_accuracy: float | None


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def eval_sample(
    prediction: Sequence[ObjectRegionPair],
    reference: Sequence[ObjectRegionPair],
    iou_threshold: float = 0.5,
    synonyms: Mapping[str, str] | None = None,
) -> SampleMetrics:
    """Score one prediction against one reference.

    The reference must contain at least one pair; an empty prediction is
    valid and scores zero everywhere.
    """
    if not reference:
        raise EmptyReferenceError("reference has no object-region pairs")
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")

    kind = classify_task(reference, synonyms)
    predicted = _flatten(prediction, synonyms)
    expected = _flatten(reference, synonyms)
    n, m = len(predicted), len(expected)

    detected_objects = detected_regions = aligned = 0
    iou_sum = 0.0
    single_hit = False
    if n:
        scores = ScoreMatrix(
            n,
            m,
            tuple(
                iou(box, ref_box)
                for _, box in predicted
                for _, ref_box in expected
            ),
        )
        result = hungarian_match(scores)
        for pi, gi, score in result.matches:
            same_object = predicted[pi][0] == expected[gi][0]
            region_hit = score >= iou_threshold
            if same_object:
                detected_objects += 1
            if region_hit:
                detected_regions += 1
            if same_object and region_hit:
                aligned += 1
            iou_sum += score
        single_hit = (
            kind is TaskKind.SINGLE_OBJECT_SINGLE_REGION
            and detected_regions == 1
        )

    def ratios(count: int) -> tuple[float, float, float]:
        precision = count / n if n else 0.0
        recall = count / m
        return precision, recall, _f1(precision, recall)

    op, orc, of1 = ratios(detected_objects)
    rp, rr, rf1 = ratios(detected_regions)
    ap, ar, af1 = ratios(aligned)
    region_accuracy = None
    if kind is TaskKind.SINGLE_OBJECT_SINGLE_REGION:
        region_accuracy = 1.0 if single_hit else 0.0
    return SampleMetrics(
        task_kind=kind,
        n_predicted=n,
        m_reference=m,
        detected_objects=detected_objects,
        detected_regions=detected_regions,
        aligned_pairs=aligned,
        object_precision=op,
        object_recall=orc,
        object_f1=of1,
        region_precision=rp,
        region_recall=rr,
        region_f1=rf1,
        alignment_precision=ap,
        alignment_recall=ar,
        alignment_f1=af1,
        mean_iou=iou_sum / max(n, m),
        region_accuracy=region_accuracy,
    )


_MEAN_FIELDS = (
    "object_precision",
    "object_recall",
    "object_f1",
    "region_precision",
    "region_recall",
    "region_f1",
    "alignment_precision",
    "alignment_recall",
    "alignment_f1",
    "mean_iou",
)


@dataclass(frozen=True)
class MetricSummary:
    """Arithmetic mean of per-sample metrics over a group of samples."""

    sample_count: int
    object_precision: float
    object_recall: float
    object_f1: float
    region_precision: float
    region_recall: float
    region_f1: float
    alignment_precision: float
    alignment_recall: float
    alignment_f1: float
    mean_iou: float
    region_accuracy: float | None
    region_accuracy_count: int


@dataclass(frozen=True)
class CorpusMetrics:
    """Macro-averaged metrics for a corpus, overall and per task kind."""

    overall: MetricSummary
    by_task: dict[TaskKind, MetricSummary]


def _summarize(samples: Sequence[SampleMetrics]) -> MetricSummary:
    count = len(samples)
    means = {
        name: math.fsum(getattr(s, name) for s in samples) / count
        for name in _MEAN_FIELDS
    }
    accuracies = [s.region_accuracy for s in samples if s.region_accuracy is not None]
    region_accuracy = math.fsum(accuracies) / len(accuracies) if accuracies else None
    return MetricSummary(
        sample_count=count,
        region_accuracy=region_accuracy,
        region_accuracy_count=len(accuracies),
        **means,
    )


def aggregate(samples: Sequence[SampleMetrics]) -> CorpusMetrics:
    """Macro-average sample metrics, overall and broken down by task kind."""
    samples = list(samples)
    if not samples:
        raise EmptyCorpusError("no samples to aggregate")
    by_task = {}
    for kind in TaskKind:
        subset = [s for s in samples if s.task_kind is kind]
        if subset:
            by_task[kind] = _summarize(subset)
    return CorpusMetrics(overall=_summarize(samples), by_task=by_task)
