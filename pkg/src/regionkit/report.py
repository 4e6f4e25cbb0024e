"""Rendering of evaluation reports: human tables and machine metric files.

Tables print percentages with two decimals, mirroring how such results are
usually tabulated. Machine files carry the same numbers at full precision,
as CSV rows (section, task, group, metric, value, count) or as nested JSON
depending on the output extension.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .region_eval import MetricSummary
from .scoring import TEXT_FIELDS, EvalReport

REGION_FIELDS = (
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

_REGION_HEADERS = (
    "obj_p",
    "obj_r",
    "obj_f1",
    "reg_p",
    "reg_r",
    "reg_f1",
    "aln_p",
    "aln_r",
    "aln_f1",
    "miou",
)

OVERALL = "overall"
ALL_TASKS = "all"


def flatten_report(report: EvalReport) -> list[tuple[str, str, str, str, float, int]]:
    """Rows of (section, task, group, metric, value, count), percent scaled."""
    rows = []

    def region_rows(task: str, group: str, summary: MetricSummary):
        for name in REGION_FIELDS:
            rows.append(
                (
                    "region",
                    task,
                    group,
                    name,
                    100.0 * getattr(summary, name),
                    summary.sample_count,
                )
            )
        if summary.region_accuracy is not None:
            rows.append(
                (
                    "region",
                    task,
                    group,
                    "region_accuracy",
                    100.0 * summary.region_accuracy,
                    summary.region_accuracy_count,
                )
            )

    if report.region_overall is not None and len(report.region_by_task) > 1:
        region_rows(ALL_TASKS, OVERALL, report.region_overall.overall)
    for task in sorted(report.region_by_task):
        metrics = report.region_by_task[task]
        region_rows(task, OVERALL, metrics.overall)
        for kind, summary in metrics.by_task.items():
            region_rows(task, kind.value, summary)

    for task in sorted(report.text_by_task):
        summary = report.text_by_task[task]
        for name in TEXT_FIELDS:
            count = summary.counts[name]
            if count == 0:
                continue
            rows.append(("text", task, ALL_TASKS, name, summary.means[name], count))
    return rows


def _format_region_table(task: str, title_note: str, groups) -> list[str]:
    lines = [f"Region metrics [{task}]{title_note}"]
    header = f"  {'group':<30}{'n':>7}"
    for label in _REGION_HEADERS:
        header += f"{label:>8}"
    header += f"{'racc':>8}"
    lines.append(header)
    for group, summary in groups:
        row = f"  {group:<30}{summary.sample_count:>7}"
        for name in REGION_FIELDS:
            row += f"{100.0 * getattr(summary, name):>8.2f}"
        if summary.region_accuracy is None:
            row += f"{'-':>8}"
        else:
            row += f"{100.0 * summary.region_accuracy:>8.2f}"
        lines.append(row)
    return lines


def render_tables(report: EvalReport, iou_threshold: float | None = None) -> str:
    """The human-readable summary printed by the eval command."""
    lines = []
    note = f" (threshold {iou_threshold:.2f})" if iou_threshold is not None else ""

    if report.region_overall is not None and len(report.region_by_task) > 1:
        groups = [(OVERALL, report.region_overall.overall)]
        lines.extend(_format_region_table(ALL_TASKS, note, groups))
        lines.append("")
    for task in sorted(report.region_by_task):
        metrics = report.region_by_task[task]
        groups = [(OVERALL, metrics.overall)]
        groups.extend(
            (kind.value, summary) for kind, summary in metrics.by_task.items()
        )
        lines.extend(_format_region_table(task, note, groups))
        lines.append("")

    for task in sorted(report.text_by_task):
        summary = report.text_by_task[task]
        lines.append(f"Text metrics [{task}] ({summary.sample_count} samples)")
        lines.append(f"  {'metric':<16}{'mean':>10}{'n':>8}")
        for name in TEXT_FIELDS:
            count = summary.counts[name]
            if count == 0:
                continue
            lines.append(f"  {name:<16}{summary.means[name]:>10.2f}{count:>8}")
        lines.append("")

    lines.append(
        f"Scored {report.scored_count} of {report.record_count} records"
        + (f"; {len(report.errors)} failed" if report.errors else "")
    )
    return "\n".join(lines) + "\n"


def write_metrics_csv(rows: Sequence[tuple], path: str | Path):
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        handle.write("section,task,group,metric,value,count\n")
        for section, task, group, metric, value, count in rows:
            handle.write(f"{section},{task},{group},{metric},{value!r},{count}\n")


def write_metrics_json(rows: Sequence[tuple], report: EvalReport, path: str | Path):
    tree: dict = {
        "records": report.record_count,
        "scored": report.scored_count,
        "failed": len(report.errors),
        "region": {},
        "text": {},
    }
    for section, task, group, metric, value, count in rows:
        bucket = tree[section].setdefault(task, {}).setdefault(group, {})
        bucket[metric] = value
        bucket.setdefault("samples", count)
    Path(path).write_text(
        json.dumps(tree, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def write_metrics_file(report: EvalReport, path: str | Path):
    """Write the machine-readable metrics; format follows the extension."""
    rows = flatten_report(report)
    if str(path).endswith(".json"):
        write_metrics_json(rows, report, path)
    else:
        write_metrics_csv(rows, path)
