"""Figure rendering for evaluation reports.

Renders alongside the delimited metric output when a figures directory is
requested: per-group region metric bars, score distributions over samples,
and text metric bars. Uses the Agg backend so batch runs never need a
display. File names are fixed so repeated runs overwrite in place.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .scoring import TEXT_FIELDS, EvalReport

_BAR_FIELDS = ("object_f1", "region_f1", "alignment_f1", "mean_iou")


def _save(figure, path: Path) -> Path:
    figure.tight_layout()
    figure.savefig(path, dpi=150)
    plt.close(figure)
    return path


def _region_bars(task: str, metrics, path: Path) -> Path:
    groups = [("overall", metrics.overall)]
    groups.extend((kind.value, summary) for kind, summary in metrics.by_task.items())
    labels = [name for name, _ in groups]
    figure, axis = plt.subplots(figsize=(max(6.0, 1.8 * len(labels)), 4.0))
    width = 0.8 / len(_BAR_FIELDS)
    for offset, field in enumerate(_BAR_FIELDS):
        values = [100.0 * getattr(summary, field) for _, summary in groups]
        positions = [i + offset * width for i in range(len(labels))]
        axis.bar(positions, values, width=width, label=field)
    axis.set_xticks([i + 0.4 - width / 2 for i in range(len(labels))])
    axis.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    axis.set_ylim(0, 100)
    axis.set_ylabel("percent")
    axis.set_title(f"Region metrics by group [{task}]")
    axis.legend(fontsize=8)
    return _save(figure, path)


def _sample_histograms(task: str, samples, path: Path) -> Path:
    figure, (left, right) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    left.hist(
        [100.0 * s.alignment_f1 for s in samples],
        bins=20,
        range=(0.0, 100.0),
        color="#4878b0",
    )
    left.set_xlabel("alignment F1")
    left.set_ylabel("samples")
    right.hist(
        [100.0 * s.mean_iou for s in samples],
        bins=20,
        range=(0.0, 100.0),
        color="#b04848",
    )
    right.set_xlabel("mean IoU")
    figure.suptitle(f"Per-sample score distribution [{task}]")
    return _save(figure, path)


def _text_bars(task: str, summary, path: Path) -> Path:
    names = [name for name in TEXT_FIELDS if summary.counts[name]]
    values = [summary.means[name] for name in names]
    figure, axis = plt.subplots(figsize=(6.0, 3.6))
    axis.bar(range(len(names)), values, color="#559955")
    axis.set_xticks(range(len(names)))
    axis.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    axis.set_ylim(0, 100)
    axis.set_ylabel("score")
    axis.set_title(f"Text metrics [{task}]")
    return _save(figure, path)


def render_eval_figures(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Render every applicable figure; returns the files written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for task, metrics in sorted(report.region_by_task.items()):
        written.append(
            _region_bars(task, metrics, out_dir / f"region_metrics_{task}.png")
        )
        samples = report.region_samples_by_task[task]
        written.append(
            _sample_histograms(
                task, samples, out_dir / f"sample_distribution_{task}.png"
            )
        )
    for task, summary in sorted(report.text_by_task.items()):
        written.append(_text_bars(task, summary, out_dir / f"text_metrics_{task}.png"))
    return written
