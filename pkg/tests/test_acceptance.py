"""End-to-end acceptance checks.

Each test prints one [PASS]/[FAIL] line on the real stdout so the verdicts
survive pytest's capture, then asserts. Numbered names keep the -v listing
in criterion order.
"""

import json
import math
import random
import time
from importlib import resources
from pathlib import Path

import numpy as np

from regionkit import (
    BBox,
    Language,
    MockTransport,
    ObjectRegionPair,
    ScoreMatrix,
    TokenSequence,
    aggregate,
    bleu,
    default_lexicon,
    eval_sample,
    extract_pairs,
    hungarian_match,
    iou,
    meteor_lite,
    parse_grounded_text,
    parse_pairs,
    read_corpus,
    rouge_l,
    run_regional_cot,
    serialize_grounded_text,
    vqa_scores,
)
from regionkit.cli import main
from generators import random_box, random_document, random_pairs, random_score_matrix
from oracles import brute_force_max_total
from sample_data import synthetic_t2r_records, write_jsonl

DATA_DIR = Path(__file__).parent / "data"

# Frozen expected metric values: candidate tokens, reference tokens, then
# bleu1, bleu4, rouge_l, meteor, token_f1, token_recall, close_accuracy.
GOLDEN_TEXT_ROWS = [
    (("the", "cat", "sat"), ("the", "cat", "sat"),
     100.0, 100.0, 100.0, 98.14814814814815, 100.0, 100.0, 100.0),
    (("the", "cat", "sat"), ("the", "cat", "sat", "down"),
     71.65313105737893, 71.65313105737893, 85.71428571428571,
     75.49857549857549, 85.71428571428571, 75.0, 0.0),
    (("the", "cat"), ("the", "cat", "sat"),
     60.653065971263345, 60.653065971263345, 80.0,
     64.6551724137931, 80.0, 66.66666666666666, 0.0),
    (("a", "b"), ("b", "a"),
     100.0, 84.08964152537145, 50.0, 50.0, 100.0, 100.0, 0.0),
    (("x", "y"), ("a", "b"),
     0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    (("肝", "脏", "增", "大"), ("肝", "脏", "增", "大"),
     100.0, 100.0, 100.0, 99.21875, 100.0, 100.0, 100.0),
    (("肝", "脏", "增", "大"), ("肝", "脏", "明", "显", "增", "大"),
     60.653065971263345, 36.0645287998779, 80.0,
     64.6551724137931, 80.0, 66.66666666666666, 0.0),
    (("yes",), ("yes",),
     100.0, 100.0, 100.0, 50.0, 100.0, 100.0, 100.0),
    (("the", "the", "cat"), ("the", "cat"),
     66.66666666666666, 68.65890479690393, 80.0,
     47.61904761904762, 80.0, 100.0, 0.0),
    (("left", "lung"), ("lung",),
     50.0, 70.71067811865476, 66.66666666666667,
     45.45454545454545, 66.66666666666666, 100.0, 0.0),
]


def _verdict(capsys, number, description, check):
    try:
        check()
    except BaseException:
        with capsys.disabled():
            print(f"\n[FAIL] criterion {number}: {description}", flush=True)
        raise
    with capsys.disabled():
        print(f"\n[PASS] criterion {number}: {description}", flush=True)


def test_criterion_01_matching_agrees_with_exhaustive_search(capsys):
    def check():
        rng = random.Random(4101)
        start = time.perf_counter()
        for _ in range(1000):
            rows = rng.randrange(1, 8)
            cols = rng.randrange(1, 8)
            grid = random_score_matrix(rng, rows, cols)
            matrix = ScoreMatrix(rows, cols, tuple(v for row in grid for v in row))
            result = hungarian_match(matrix)
            total = math.fsum(score for _, _, score in result.matches)
            assert abs(total - brute_force_max_total(grid)) <= 1e-12
        assert time.perf_counter() - start < 10.0

    _verdict(capsys, 1, "optimal matching totals agree with exhaustive search "
                "on 1000 random matrices (<=1e-12, <10 s)", check)


def test_criterion_02_iou_axioms_and_worked_example(capsys):
    def check():
        rng = random.Random(4102)
        for _ in range(10000):
            a, b = random_box(rng), random_box(rng)
            ab = iou(a, b)
            assert 0.0 <= ab <= 1.0
            assert ab == iou(b, a)
            assert iou(a, a) == 1.0
        assert iou(BBox(0, 0, 4, 4), BBox(10, 10, 14, 14)) == 0.0
        worked = iou(BBox(0, 0, 10, 10), BBox(5, 5, 15, 15))
        assert abs(worked - 1.0 / 7.0) <= 1e-12

    _verdict(capsys, 2, "IoU is symmetric, bounded, exact on the 1/7 overlap "
                "example (10k random pairs, <=1e-12)", check)


def test_criterion_03_self_evaluation_is_perfect(capsys):
    def check():
        rng = random.Random(4103)
        kinds_seen = set()
        for _ in range(500):
            reference = random_pairs(rng)
            metrics = eval_sample(reference, reference)
            kinds_seen.add(metrics.task_kind)
            for name in (
                "object_precision", "object_recall", "object_f1",
                "region_precision", "region_recall", "region_f1",
                "alignment_precision", "alignment_recall", "alignment_f1",
                "mean_iou",
            ):
                assert getattr(metrics, name) == 1.0
        assert len(kinds_seen) == 4

    _verdict(capsys, 3, "500 random references of all four task kinds score "
                "exactly 1.0 against themselves on every ratio", check)


def test_criterion_04_hand_counted_fixtures(capsys):
    def check():
        low_overlap = eval_sample(
            parse_pairs("<ref>liver</ref><box>[0, 0, 10, 10]</box>"),
            parse_pairs("<ref>liver</ref><box>[5, 5, 15, 15]</box>"),
        )
        assert low_overlap.object_f1 == 1.0
        assert low_overlap.region_f1 == 0.0
        assert low_overlap.alignment_f1 == 0.0
        assert abs(low_overlap.mean_iou - 1.0 / 7.0) <= 1e-12

        partial = eval_sample(
            parse_pairs("<ref>liver</ref><box>[0, 0, 10, 10]</box>"),
            parse_pairs(
                "<ref>liver</ref><box>[0, 0, 10, 10]</box>"
                "<ref>spleen</ref><box>[100, 100, 200, 200]</box>"
            ),
        )
        assert partial.alignment_precision == 1.0
        assert partial.alignment_recall == 0.5
        assert abs(partial.alignment_f1 - 2.0 / 3.0) <= 1e-12
        assert partial.mean_iou == 0.5

        wrong_name = eval_sample(
            parse_pairs("<ref>spleen</ref><box>[10, 10, 50, 50]</box>"),
            parse_pairs("<ref>liver</ref><box>[10, 10, 50, 50]</box>"),
        )
        assert wrong_name.object_f1 == 0.0
        assert wrong_name.region_f1 == 1.0
        assert wrong_name.alignment_f1 == 0.0
        assert wrong_name.region_accuracy == 1.0

    _verdict(capsys, 4, "three hand-counted fixtures reproduce exactly at "
                "threshold 0.5", check)


def test_criterion_05_roundtrip_and_malformed_preservation(capsys):
    def check():
        rng = random.Random(4105)
        for _ in range(10000):
            document = random_document(rng)
            result = parse_grounded_text(serialize_grounded_text(document), "strict")
            assert result.document == document
            assert result.issues == ()

        kinds = set()
        lines = (DATA_DIR / "malformed_markup.txt").read_text(
            encoding="utf-8"
        ).splitlines()
        assert len(lines) == 100
        for line in lines:
            result = parse_grounded_text(line)
            assert result.issues
            kinds.update(issue.kind for issue in result.issues)
            out = serialize_grounded_text(result.document)
            assert "".join(out.split()) == "".join(line.split())
        assert kinds == {
            "malformed_box", "dangling_box", "unclosed_tag", "ref_without_box",
        }

    _verdict(capsys, 5, "10k random documents round-trip exactly; 100 malformed "
                "lines parse leniently with all four issue kinds and no "
                "content loss", check)


def test_criterion_06_golden_text_metrics(capsys):
    def check():
        for row in GOLDEN_TEXT_ROWS:
            cand_tokens, ref_tokens, b1, b4, ro, me, f1, rec, close = row
            language = (
                Language.CHINESE
                if any(ord(t[0]) > 0x2E80 for t in cand_tokens)
                else Language.ENGLISH
            )
            cand = TokenSequence(cand_tokens, language)
            ref = TokenSequence(ref_tokens, language)
            assert abs(bleu(cand, ref, max_n=1) - b1) <= 1e-9
            assert abs(bleu(cand, ref) - b4) <= 1e-9
            assert abs(rouge_l(cand, ref) - ro) <= 1e-9
            assert abs(meteor_lite(cand, ref) - me) <= 1e-9
            scores = vqa_scores(cand, ref, closed=True)
            assert abs(scores.token_f1 - f1) <= 1e-9
            assert abs(scores.token_recall - rec) <= 1e-9
            assert scores.close_accuracy == close

    _verdict(capsys, 6, "ten frozen text-metric rows reproduce to within 1e-9",
             check)


def test_criterion_07_forge_determinism_and_validity(tmp_path, capsys):
    def check():
        organs = default_lexicon().organs
        rng = np.random.default_rng(4107)
        rows = []
        for index in range(50):
            grid = np.zeros((64, 64), dtype=np.uint8)
            top = int(rng.integers(0, 40))
            left = int(rng.integers(0, 40))
            height = int(rng.integers(4, 20))
            width = int(rng.integers(4, 20))
            grid[top : top + height, left : left + width] = 1
            if index % 5 == 0:
                second_top = int(rng.integers(44, 58))
                grid[second_top : second_top + 4, 2:10] = 1
            mask_path = tmp_path / f"mask_{index:02d}.npy"
            np.save(mask_path, grid)
            label = organs[index % len(organs)]
            row = {"id": f"case-{index:02d}", "mask": mask_path.name, "label": label}
            if index % 4 == 0:
                row["report"] = f"The {label} is unremarkable. No acute finding."
            if index % 7 == 0:
                row["language"] = "zh"
            rows.append(row)
        manifest = tmp_path / "manifest.jsonl"
        write_jsonl(manifest, rows)

        outputs = []
        for name in ("first.jsonl", "second.jsonl"):
            out = tmp_path / name
            rc = main(["forge", "--input", str(manifest), "--output", str(out),
                       "--seed", "99"])
            assert rc == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

        records = read_corpus(tmp_path / "first.jsonl")
        assert len(records) >= 100
        for record in records:
            reparsed = parse_grounded_text(record.reference, "strict")
            assert reparsed.issues == ()
            if record.task in ("t2r", "grounded_report"):
                assert extract_pairs(reparsed.document)
            if record.task == "r2t":
                # The question shows the bare region the answer must name.
                assert "<box>[" in record.question

    _verdict(capsys, 7, "forging 50 masks twice with one seed is byte-identical "
                "and every emitted answer reparses strictly", check)


def test_criterion_08_cot_reproducibility_and_call_count(tmp_path, capsys):
    def check():
        questions = [
            {"id": f"q{i:02d}", "question": f"What about region {i}?",
             "image": f"image-{i:02d}"}
            for i in range(20)
        ]
        questions_path = tmp_path / "questions.jsonl"
        write_jsonl(questions_path, questions)
        shipped = resources.files("regionkit.data").joinpath("mock_cot_script.json")
        script = json.loads(shipped.read_text(encoding="utf-8"))

        outputs = []
        with resources.as_file(shipped) as script_path:
            for name in ("a.jsonl", "b.jsonl"):
                out = tmp_path / name
                rc = main(["cot", "--input", str(questions_path),
                           "--output", str(out), "--mock", str(script_path)])
                assert rc == 0
                outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        rows = [json.loads(line) for line in outputs[0].decode().splitlines()]
        assert len(rows) == 20
        assert not any(row["fallback"] for row in rows)

        transport = MockTransport(script)
        for row in questions:
            trace = run_regional_cot(row["question"], row["image"], transport)
            assert not trace.used_fallback
        assert transport.send_count == 2 * len(questions)

    _verdict(capsys, 8, "20 questions through the shipped mock script are "
                "byte-reproducible with exactly two transport calls per "
                "question", check)


def test_criterion_09_eval_throughput_and_jobs_invariance(tmp_path, capsys):
    def check():
        records = synthetic_t2r_records(10000, seed=4109)
        corpus = tmp_path / "corpus.jsonl"
        write_jsonl(corpus, [r.to_json_dict() for r in records])

        single = tmp_path / "single.csv"
        start = time.perf_counter()
        rc = main(["eval", "--input", str(corpus), "--output", str(single),
                   "--jobs", "1"])
        elapsed = time.perf_counter() - start
        assert rc == 0
        assert elapsed < 5.0

        parallel = tmp_path / "parallel.csv"
        rc = main(["eval", "--input", str(corpus), "--output", str(parallel),
                   "--jobs", "8"])
        assert rc == 0
        assert single.read_bytes() == parallel.read_bytes()

    _verdict(capsys, 9, "evaluating 10k records takes under five seconds "
                "single-threaded and --jobs does not change a byte", check)


def test_criterion_10_corruption_never_raises_region_scores(capsys):
    def check():
        rng = random.Random(4110)
        samples = []
        for _ in range(200):
            reference = []
            for pair_index in range(rng.randrange(1, 5)):
                boxes = []
                for _ in range(rng.randrange(1, 4)):
                    x1 = rng.randrange(0, 480)
                    y1 = rng.randrange(0, 480)
                    boxes.append(BBox(
                        x1, y1,
                        rng.randrange(x1 + 1, 500), rng.randrange(y1 + 1, 500),
                    ))
                reference.append(
                    ObjectRegionPair(f"object {pair_index}", tuple(boxes))
                )
            slots = [
                (i, j)
                for i, pair in enumerate(reference)
                for j in range(len(pair.regions))
            ]
            rng.shuffle(slots)
            samples.append((reference, slots))

        curve = []
        for fraction in (0.0, 0.25, 0.5, 1.0):
            evaluated = []
            for reference, slots in samples:
                corrupted = {
                    slot
                    for slot in slots[: math.ceil(fraction * len(slots))]
                }
                prediction = []
                for i, pair in enumerate(reference):
                    boxes = []
                    for j, box in enumerate(pair.regions):
                        if (i, j) in corrupted:
                            offset = 500 + 10 * (7 * i + j)
                            boxes.append(BBox(offset, 500, offset + 9, 509))
                        else:
                            boxes.append(box)
                    prediction.append(ObjectRegionPair(pair.object_text, tuple(boxes)))
                evaluated.append(eval_sample(prediction, reference))
            summary = aggregate(evaluated).overall
            curve.append((summary.region_f1, summary.alignment_f1))

        for before, after in zip(curve, curve[1:]):
            assert after[0] <= before[0]
            assert after[1] <= before[1]
        assert curve[0] == (1.0, 1.0)
        assert curve[-1] == (0.0, 0.0)

    _verdict(capsys, 10, "replacing a growing share of predicted boxes with "
                 "disjoint ones never raises region or alignment F1", check)
