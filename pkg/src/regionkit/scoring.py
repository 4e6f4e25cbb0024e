"""Batch scoring: route corpus records to metrics and aggregate.

Region tasks (t2r) go through region_eval, text tasks (r2t, vqa, report)
through text_metrics, and grounded_report through both: regions from the
annotations, text from the per-pair descriptions concatenated in order.
References always parse strictly; a reference that fails to parse makes that
record an error, excluded from every average. Predictions parse in the
configured mode, so lenient runs tolerate malformed model output.

Aggregation walks records in input order with compensated sums, which makes
results bit-identical across runs and across worker counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Mapping, Sequence

from .corpus import CorpusRecord, RunConfig, load_synonyms
from .errors import RegionKitError
from .markup import STRICT, parse_pairs
from .region_eval import CorpusMetrics, SampleMetrics, aggregate, eval_sample
from .text_metrics import Language, TextScores, score_text_pair, tokenize

TEXT_FIELDS = (
    "bleu1",
    "bleu4",
    "rouge_l",
    "meteor",
    "token_f1",
    "token_recall",
    "close_accuracy",
)

_REGION_TASKS = ("t2r", "grounded_report")
_TEXT_TASKS = ("r2t", "vqa", "report", "grounded_report")


@dataclass(frozen=True)
class RecordError:
    """Why one record was excluded from scoring."""

    record_id: str
    task: str
    message: str


@dataclass(frozen=True)
class RecordScore:
    """Scores for one record; either part may be absent depending on task."""

    record_id: str
    task: str
    language: str
    closed: bool | None
    region: SampleMetrics | None
    text: TextScores | None


def _tokenizer_language(language: str) -> Language:
    return Language.CHINESE if language == "zh" else Language.ENGLISH


def _described_text(pairs) -> str:
    return " ".join(pair.description for pair in pairs if pair.description)


def score_record(
    record: CorpusRecord,
    iou_threshold: float = 0.5,
    mode: str = "lenient",
    synonyms: Mapping[str, str] | None = None,
    task_override: str = "auto",
) -> RecordScore:
    """Score one record according to its task; raises RegionKitError on
    malformed references (and on malformed predictions in strict mode)."""
    task = record.task if task_override == "auto" else task_override
    language = _tokenizer_language(record.language)

    region = None
    text = None
    if task in _REGION_TASKS:
        reference_pairs = parse_pairs(record.reference, STRICT)
        prediction_pairs = parse_pairs(record.prediction, mode)
        region = eval_sample(
            prediction_pairs, reference_pairs, iou_threshold, synonyms
        )
        if task == "grounded_report":
            text = score_text_pair(
                tokenize(_described_text(prediction_pairs), language),
                tokenize(_described_text(reference_pairs), language),
            )
    if task in _TEXT_TASKS and task != "grounded_report":
        text = score_text_pair(
            tokenize(record.prediction, language),
            tokenize(record.reference, language),
        )
    return RecordScore(
        record_id=record.id,
        task=task,
        language=record.language,
        closed=record.closed,
        region=region,
        text=text,
    )


def _score_one(
    record: CorpusRecord,
    iou_threshold: float,
    mode: str,
    synonyms: Mapping[str, str] | None,
    task_override: str,
):
    try:
        return score_record(record, iou_threshold, mode, synonyms, task_override)
    except RegionKitError as exc:
        return RecordError(record.id, record.task, str(exc))


@dataclass(frozen=True)
class TextSummary:
    """Mean text metrics for one task.

    counts give how many records contributed to each field; for vqa,
    close_accuracy only counts closed questions and token_recall only open
    ones.
    """

    sample_count: int
    means: dict[str, float]
    counts: dict[str, int]


@dataclass(frozen=True)
class EvalReport:
    """Everything cmd_eval knows after scoring a corpus."""

    record_count: int
    scored_count: int
    errors: tuple[RecordError, ...]
    region_overall: CorpusMetrics | None
    region_by_task: dict[str, CorpusMetrics]
    text_by_task: dict[str, TextSummary]
    region_samples_by_task: dict[str, list[SampleMetrics]]


def _text_contributes(task: str, field: str, closed: bool | None) -> bool:
    if task != "vqa":
        return True
    if field == "close_accuracy":
        return closed is True
    if field == "token_recall":
        return closed is not True
    return True


def _summarize_text(scores: Sequence[RecordScore]) -> TextSummary:
    values: dict[str, list[float]] = {name: [] for name in TEXT_FIELDS}
    for score in scores:
        for name in TEXT_FIELDS:
            if _text_contributes(score.task, name, score.closed):
                values[name].append(getattr(score.text, name))
    means = {}
    counts = {}
    for name, collected in values.items():
        counts[name] = len(collected)
        means[name] = math.fsum(collected) / len(collected) if collected else 0.0
    return TextSummary(
        sample_count=len(scores),
        means=means,
        counts=counts,
    )


def build_report(
    record_count: int,
    scores: Sequence[RecordScore],
    errors: Sequence[RecordError],
) -> EvalReport:
    """Aggregate per-record scores; iteration follows input order throughout."""
    region_samples_by_task: dict[str, list[SampleMetrics]] = {}
    text_scores_by_task: dict[str, list[RecordScore]] = {}
    all_region_samples: list[SampleMetrics] = []
    for score in scores:
        if score.region is not None:
            region_samples_by_task.setdefault(score.task, []).append(score.region)
            all_region_samples.append(score.region)
        if score.text is not None:
            text_scores_by_task.setdefault(score.task, []).append(score)

    region_by_task = {
        task: aggregate(samples) for task, samples in region_samples_by_task.items()
    }
    region_overall = aggregate(all_region_samples) if all_region_samples else None
    text_by_task = {
        task: _summarize_text(entries)
        for task, entries in text_scores_by_task.items()
    }
    return EvalReport(
        record_count=record_count,
        scored_count=len(scores),
        errors=tuple(errors),
        region_overall=region_overall,
        region_by_task=region_by_task,
        text_by_task=text_by_task,
        region_samples_by_task=region_samples_by_task,
    )


def evaluate_corpus(records: Sequence[CorpusRecord], config: RunConfig) -> EvalReport:
    """Score every record under the config and aggregate.

    With jobs > 1 the records are scored in a process pool; results are
    gathered back into input order before any aggregation, so the report is
    identical for any worker count.
    """
    synonyms = load_synonyms(config.synonyms) if config.synonyms else None
    worker = partial(
        _score_one,
        iou_threshold=config.iou_threshold,
        mode=config.mode,
        synonyms=synonyms,
        task_override=config.task,
    )
    if config.jobs == 1 or len(records) < 2:
        outcomes = [worker(record) for record in records]
    else:
        chunk = max(1, len(records) // (config.jobs * 4))
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(worker, records, chunksize=chunk))

    scores = [o for o in outcomes if isinstance(o, RecordScore)]
    errors = [o for o in outcomes if isinstance(o, RecordError)]
    return build_report(len(records), scores, errors)
