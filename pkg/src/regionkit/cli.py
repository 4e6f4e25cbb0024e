"""Command-line interface: eval, parse, forge, and cot workflows.

Every numeric option can come from (highest precedence first) a flag, a
REGIONKIT_* environment variable, or a --config file. Commands never touch
their input files; failures of individual records are collected into a
sibling .errors.jsonl file and turn the exit code to 1, while unusable
inputs or configuration exit with 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import zlib
from pathlib import Path

from .corpus import (
    CorpusRecord,
    RunConfig,
    read_corpus,
    resolve_config,
    write_corpus,
)
from .cot import CotConfig, HttpModelTransport, MockTransport, run_regional_cot
from .errors import MarkupError, RegionKitError, TransportError
from .forge import (
    Direction,
    OrganLexicon,
    assemble_grounded_report,
    default_lexicon,
    default_templates,
    forge_region_samples,
    load_mask,
    load_templates,
    segment_report,
)
from .geometry import mask_to_boxes, normalize_box
from .markup import extract_pairs, parse_grounded_text, serialize_grounded_text
from .scoring import evaluate_corpus
from .report import render_tables, write_metrics_file


def _errors_path(base: str | Path) -> Path:
    base = Path(base)
    return base.parent / (base.stem + ".errors.jsonl")


def _write_error_file(entries, path: Path):
    with path.open("w", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(json.dumps(entry, ensure_ascii=False) + "\n")


def _config_from_args(args) -> RunConfig:
    cli_values = {}
    for name in RunConfig.__dataclass_fields__:
        source = "language" if name == "language" else name
        if hasattr(args, source):
            cli_values[name] = getattr(args, source)
    return resolve_config(cli_values, os.environ, getattr(args, "config", None))


def cmd_eval(args) -> int:
    config = _config_from_args(args)
    records = read_corpus(args.input)
    report = evaluate_corpus(records, config)
    sys.stdout.write(render_tables(report, config.iou_threshold))
    if args.output:
        write_metrics_file(report, args.output)
    if config.figures:
        from .figures import render_eval_figures

        written = render_eval_figures(report, config.figures)
        for path in written:
            print(f"figure: {path}")
    if report.errors:
        errors_path = _errors_path(args.output if args.output else args.input)
        _write_error_file(
            (
                {"id": e.record_id, "task": e.task, "error": e.message}
                for e in report.errors
            ),
            errors_path,
        )
        print(f"{len(report.errors)} records failed; details in {errors_path}")
        return 1
    return 0


def cmd_parse(args) -> int:
    config = _config_from_args(args)
    text = Path(args.input).read_text(encoding="utf-8")
    dump_lines = []
    failures = []
    pair_total = issue_total = 0
    for number, line in enumerate(text.splitlines(), start=1):
        try:
            result = parse_grounded_text(line, config.mode)
        except MarkupError as exc:
            failures.append(f"line {number}: {exc}")
            continue
        pairs = [
            {
                "object": pair.object_text,
                "boxes": [list(box.as_tuple()) for box in pair.regions],
                "description": pair.description,
            }
            for pair in extract_pairs(result.document)
        ]
        issues = [
            {"kind": issue.kind, "position": issue.position, "fragment": issue.fragment}
            for issue in result.issues
        ]
        pair_total += len(pairs)
        issue_total += len(issues)
        dump_lines.append(
            json.dumps(
                {"line": number, "pairs": pairs, "issues": issues},
                ensure_ascii=False,
            )
        )
    summary = (
        f"{len(dump_lines)} lines, {pair_total} pairs, {issue_total} issues"
        + (f", {len(failures)} failed" if failures else "")
    )
    if args.output:
        Path(args.output).write_text(
            "".join(line + "\n" for line in dump_lines), encoding="utf-8"
        )
        print(summary)
    else:
        for line in dump_lines:
            print(line)
        print(summary, file=sys.stderr)
    for failure in failures:
        print(failure, file=sys.stderr)
    return 1 if failures else 0


def _read_manifest(path: str | Path):
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
            if not isinstance(row, dict):
                raise ValueError("manifest row must be an object")
        except ValueError as exc:
            rows.append({"_error": f"line {number}: {exc}", "id": f"line-{number}"})
            continue
        row.setdefault("id", f"line-{number}")
        rows.append(row)
    return rows


def _row_seed(base_seed: int, row_id: str) -> int:
    return zlib.crc32(f"{base_seed}:{row_id}".encode("utf-8"))


def cmd_forge(args) -> int:
    config = _config_from_args(args)
    manifest_dir = Path(args.input).parent

    lexicon = (
        OrganLexicon.from_file(config.lexicon) if config.lexicon else default_lexicon()
    )
    template_cache: dict[str, list] = {}

    def templates_for(language: str):
        if language not in template_cache:
            if config.templates:
                base = Path(config.templates)
                path = base / f"{language}.jsonl" if base.is_dir() else base
                template_cache[language] = load_templates(path)
            else:
                template_cache[language] = default_templates(language)
        return template_cache[language]

    records: list[CorpusRecord] = []
    errors = []
    counts = {direction.value: 0 for direction in Direction}
    counts["grounded_report"] = 0
    for row in _read_manifest(args.input):
        row_id = str(row.get("id"))
        if "_error" in row:
            errors.append({"id": row_id, "error": row["_error"]})
            continue
        try:
            mask_path = Path(row["mask"])
            if not mask_path.is_absolute():
                mask_path = manifest_dir / mask_path
            label = row["label"]
            language = row.get("language", config.language)
            mask = load_mask(mask_path)
            image_ref = row.get("image", str(mask_path))
            samples = forge_region_samples(
                mask,
                label,
                templates_for(language),
                _row_seed(config.seed, row_id),
                image_ref=image_ref,
                sample_id=row_id,
            )
            for sample in samples:
                records.append(
                    CorpusRecord(
                        id=sample.id,
                        task=sample.direction.value,
                        language=language,
                        image=sample.image_ref,
                        prediction="",
                        reference=sample.answer,
                        question=sample.question,
                    )
                )
                counts[sample.direction.value] += 1
            if row.get("report"):
                boxes = [
                    normalize_box(b, mask.width, mask.height)
                    for b in mask_to_boxes(mask)
                ]
                assembled = assemble_grounded_report(
                    segment_report(row["report"], lexicon), {label: boxes}
                )
                records.append(
                    CorpusRecord(
                        id=f"{row_id}-grounded",
                        task="grounded_report",
                        language=language,
                        image=image_ref,
                        prediction="",
                        reference=serialize_grounded_text(assembled.document),
                    )
                )
                counts["grounded_report"] += 1
        except (RegionKitError, OSError, KeyError, TypeError) as exc:
            errors.append({"id": row_id, "error": f"{type(exc).__name__}: {exc}"})
    write_corpus(records, args.output)
    parts = [f"{counts[d.value]} {d.value}" for d in Direction]
    if counts["grounded_report"]:
        parts.append(f"{counts['grounded_report']} grounded_report")
    print(f"forged {len(records)} records ({', '.join(parts)})")
    if errors:
        errors_path = _errors_path(args.output)
        _write_error_file(errors, errors_path)
        print(f"{len(errors)} rows failed; details in {errors_path}")
        return 1
    return 0


def cmd_cot(args) -> int:
    config = _config_from_args(args)
    if config.mock:
        transport = MockTransport.from_file(config.mock)
    elif config.endpoint:
        transport = HttpModelTransport(config.endpoint)
    else:
        raise RegionKitError("cot needs either --mock or --endpoint")
    cot_config = CotConfig.for_language(config.language)

    text = Path(args.input).read_text(encoding="utf-8")
    traces = []
    fallbacks = failures = 0
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        row = json.loads(line)
        row_id = str(row.get("id", f"line-{number}"))
        question = row.get("question", "")
        image_ref = row.get("image", "")
        try:
            trace = run_regional_cot(question, image_ref, transport, cot_config)
        except TransportError as exc:
            trace = exc.trace
            failures += 1
        if trace.used_fallback:
            fallbacks += 1
        traces.append({"id": row_id, **trace.to_record(include_timing=config.timing)})
    with Path(args.output).open("w", encoding="utf-8") as handle:
        for record in traces:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(
        f"ran {len(traces)} questions ({fallbacks} fallbacks, {failures} failures)"
    )
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regionkit",
        description="Region-grounded report parsing, forging, and evaluation.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    evaluate = commands.add_parser("eval", help="score a prediction corpus")
    evaluate.add_argument("--input", required=True, help="corpus file, one JSON record per line")
    evaluate.add_argument("--output", help="metrics file (.csv or .json)")
    evaluate.add_argument("--task", choices=["auto", "r2t", "t2r", "grounded_report", "vqa", "report"])
    evaluate.add_argument("--iou-threshold", dest="iou_threshold", type=float)
    evaluate.add_argument("--mode", choices=["strict", "lenient"])
    evaluate.add_argument("--lang", dest="language", choices=["en", "zh"])
    evaluate.add_argument("--jobs", type=int)
    evaluate.add_argument("--synonyms", help="object-text synonym map (JSON)")
    evaluate.add_argument("--figures", help="directory for rendered figures")
    evaluate.add_argument("--config", help="flat key = value settings file")
    evaluate.set_defaults(func=cmd_eval)

    parse = commands.add_parser("parse", help="dump grounded markup structure")
    parse.add_argument("--input", required=True, help="text file, one document per line")
    parse.add_argument("--output", help="dump file (JSON lines)")
    parse.add_argument("--mode", choices=["strict", "lenient"])
    parse.add_argument("--config", help="flat key = value settings file")
    parse.set_defaults(func=cmd_parse)

    forge = commands.add_parser("forge", help="build a corpus from masks")
    forge.add_argument("--input", required=True, help="manifest file, one JSON row per line")
    forge.add_argument("--output", required=True, help="corpus file to write")
    forge.add_argument("--templates", help="template file or directory")
    forge.add_argument("--lexicon", help="organ lexicon (JSON)")
    forge.add_argument("--seed", type=int)
    forge.add_argument("--lang", dest="language", choices=["en", "zh"])
    forge.add_argument("--config", help="flat key = value settings file")
    forge.set_defaults(func=cmd_forge)

    cot = commands.add_parser("cot", help="run regional chain-of-thought")
    cot.add_argument("--input", required=True, help="questions file, one JSON row per line")
    cot.add_argument("--output", required=True, help="trace file to write")
    cot.add_argument("--endpoint", help="model endpoint URL")
    cot.add_argument("--mock", help="scripted mock transport (JSON)")
    cot.add_argument("--lang", dest="language", choices=["en", "zh"])
    cot.add_argument("--timing", action="store_true", default=None,
                     help="include stage timings in the trace file")
    cot.add_argument("--config", help="flat key = value settings file")
    cot.set_defaults(func=cmd_cot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RegionKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
