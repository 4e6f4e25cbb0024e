import random

import pytest

from regionkit import (
    Language,
    TokenSequence,
    bleu,
    meteor_lite,
    rouge_l,
    score_text_pair,
    tokenize,
    vqa_scores,
)
from oracles import bleu_oracle, rouge_l_oracle, token_overlap_oracle

# Each row: candidate tokens, reference tokens, then the expected values for
# bleu1, bleu4, rouge_l, meteor, token_f1, token_recall, close_accuracy.
GOLDEN = [
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

_VOCAB = ["the", "lung", "is", "clear", "heart", "size", "normal", "no", "mass"]


def seq(tokens, language=Language.ENGLISH):
    return TokenSequence(tuple(tokens), language)


def random_tokens(rng, low=0, high=8):
    return tuple(rng.choice(_VOCAB) for _ in range(rng.randrange(low, high)))


class TestTokenize:
    def test_english_basic(self):
        assert tokenize("Heart size is normal.").tokens == (
            "heart", "size", "is", "normal",
        )

    def test_english_punctuation_splits(self):
        assert tokenize("well-defined, 3cm mass").tokens == (
            "well", "defined", "3cm", "mass",
        )

    def test_english_collapses_whitespace(self):
        assert tokenize("  a \t b \n ").tokens == ("a", "b")

    def test_empty_text(self):
        assert tokenize("").tokens == ()
        assert tokenize("...").tokens == ()

    def test_chinese_char_per_token(self):
        result = tokenize("肝脏增大。", Language.CHINESE)
        assert result.tokens == ("肝", "脏", "增", "大")
        assert result.language is Language.CHINESE

    def test_mixed_keeps_latin_runs_whole(self):
        result = tokenize("CT平扫示肝脏增大。", Language.MIXED)
        assert result.tokens == ("ct", "平", "扫", "示", "肝", "脏", "增", "大")

    def test_mixed_digit_runs(self):
        result = tokenize("直径3cm的结节", Language.MIXED)
        assert result.tokens == ("直", "径", "3cm", "的", "结", "节")

    def test_fullwidth_punctuation_removed(self):
        result = tokenize("心脏，正常；无异常。", Language.CHINESE)
        assert result.tokens == ("心", "脏", "正", "常", "无", "异", "常")

    def test_latin_only_text_in_chinese_mode(self):
        result = tokenize("no acute disease", Language.CHINESE)
        assert result.tokens == ("no", "acute", "disease")

    def test_token_sequence_rejects_empty_tokens(self):
        with pytest.raises(ValueError):
            TokenSequence(("a", ""), Language.ENGLISH)

    def test_len(self):
        assert len(tokenize("one two three")) == 3


class TestGoldenValues:
    @pytest.mark.parametrize("row", GOLDEN, ids=[" ".join(r[0]) for r in GOLDEN])
    def test_all_metrics(self, row):
        cand_tokens, ref_tokens, b1, b4, ro, me, f1, rec, close = row
        cand, ref = seq(cand_tokens), seq(ref_tokens)
        assert abs(bleu(cand, ref, max_n=1) - b1) <= 1e-9
        assert abs(bleu(cand, ref) - b4) <= 1e-9
        assert abs(rouge_l(cand, ref) - ro) <= 1e-9
        assert abs(meteor_lite(cand, ref) - me) <= 1e-9
        scores = vqa_scores(cand, ref, closed=True)
        assert abs(scores.token_f1 - f1) <= 1e-9
        assert abs(scores.token_recall - rec) <= 1e-9
        assert scores.close_accuracy == close


class TestBleu:
    def test_zero_unigram_overlap_is_zero(self):
        assert bleu(seq(["x"]), seq(["y"])) == 0.0

    def test_empty_candidate_or_reference(self):
        assert bleu(seq([]), seq(["a"])) == 0.0
        assert bleu(seq(["a"]), seq([])) == 0.0

    def test_no_brevity_penalty_when_longer(self):
        value = bleu(seq(["a", "b", "c"]), seq(["a", "b"]), max_n=1)
        assert abs(value - 100.0 * 2 / 3) <= 1e-9

    def test_brevity_penalty_when_shorter(self):
        import math

        value = bleu(seq(["a", "b"]), seq(["a", "b", "c", "d"]), max_n=1)
        assert abs(value - 100.0 * math.exp(1 - 2.0)) <= 1e-9

    def test_invalid_max_n(self):
        with pytest.raises(ValueError):
            bleu(seq(["a"]), seq(["a"]), max_n=0)

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(55)
        for _ in range(500):
            cand = random_tokens(rng)
            ref = random_tokens(rng)
            for max_n in (1, 2, 4):
                got = bleu(seq(cand), seq(ref), max_n=max_n)
                assert abs(got - bleu_oracle(cand, ref, max_n)) <= 1e-9


class TestRougeL:
    def test_subsequence_not_substring(self):
        # a-c is a subsequence of a-b-c even though not contiguous.
        value = rouge_l(seq(["a", "c"]), seq(["a", "b", "c"]))
        assert abs(value - 80.0) <= 1e-9

    def test_order_matters(self):
        assert rouge_l(seq(["a", "b"]), seq(["b", "a"])) == 50.0

    def test_empty_inputs(self):
        assert rouge_l(seq([]), seq(["a"])) == 0.0
        assert rouge_l(seq(["a"]), seq([])) == 0.0

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(66)
        for _ in range(500):
            cand = random_tokens(rng)
            ref = random_tokens(rng)
            got = rouge_l(seq(cand), seq(ref))
            assert abs(got - rouge_l_oracle(cand, ref)) <= 1e-9


class TestMeteorLite:
    def test_contiguous_match_is_one_chunk(self):
        # Three-token identity: penalty is 0.5 * (1/3)^3.
        value = meteor_lite(seq(["a", "b", "c"]), seq(["a", "b", "c"]))
        assert abs(value - 98.14814814814815) <= 1e-9

    def test_fragmentation_lowers_score(self):
        contiguous = meteor_lite(
            seq(["a", "b", "c", "d"]), seq(["a", "b", "c", "d"])
        )
        fragmented = meteor_lite(
            seq(["a", "b", "c", "d"]), seq(["a", "x", "b", "y", "c", "z", "d"])
        )
        assert fragmented < contiguous

    def test_alignment_prefers_run_continuation(self):
        # "b" could map to either reference position; continuing the run
        # from "a" keeps one chunk and a higher score.
        value = meteor_lite(seq(["a", "b"]), seq(["b", "a", "b"]))
        # matches 2, chunks 1: P = 1, R = 2/3.
        expected = 100.0 * ((2 / 3) / (0.9 + 0.1 * (2 / 3))) * (1 - 0.5 * (1 / 2) ** 3)
        assert abs(value - expected) <= 1e-9

    def test_no_matches_is_zero(self):
        assert meteor_lite(seq(["x"]), seq(["y"])) == 0.0

    def test_empty_inputs(self):
        assert meteor_lite(seq([]), seq(["a"])) == 0.0
        assert meteor_lite(seq(["a"]), seq([])) == 0.0

    def test_score_bounded(self):
        rng = random.Random(77)
        for _ in range(500):
            value = meteor_lite(
                seq(random_tokens(rng)), seq(random_tokens(rng))
            )
            assert 0.0 <= value <= 100.0


class TestVqaScores:
    def test_open_question_has_no_close_accuracy(self):
        scores = vqa_scores(seq(["yes"]), seq(["yes"]), closed=False)
        assert scores.close_accuracy is None
        assert scores.token_f1 == 100.0

    def test_closed_question_exact_match(self):
        assert vqa_scores(seq(["yes"]), seq(["yes"]), closed=True).close_accuracy == 100.0
        assert vqa_scores(seq(["no"]), seq(["yes"]), closed=True).close_accuracy == 0.0

    def test_close_accuracy_requires_exact_order(self):
        scores = vqa_scores(seq(["a", "b"]), seq(["b", "a"]), closed=True)
        assert scores.close_accuracy == 0.0
        assert scores.token_f1 == 100.0

    def test_multiset_clipping(self):
        scores = vqa_scores(seq(["yes", "yes"]), seq(["yes"]), closed=False)
        assert scores.token_recall == 100.0
        assert abs(scores.token_f1 - 100.0 * 2 / 3) <= 1e-9

    def test_empty_reference_scores_zero(self):
        scores = vqa_scores(seq(["a"]), seq([]), closed=True)
        assert scores == vqa_scores(seq(["a"]), seq([]), closed=True)
        assert scores.token_f1 == 0.0
        assert scores.token_recall == 0.0
        assert scores.close_accuracy == 0.0

    def test_empty_candidate(self):
        scores = vqa_scores(seq([]), seq(["a"]), closed=False)
        assert scores.token_f1 == 0.0
        assert scores.token_recall == 0.0

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(88)
        for _ in range(500):
            cand = random_tokens(rng)
            ref = random_tokens(rng, low=1)
            got = vqa_scores(seq(cand), seq(ref), closed=False)
            f1, recall = token_overlap_oracle(cand, ref)
            assert abs(got.token_f1 - f1) <= 1e-9
            assert abs(got.token_recall - recall) <= 1e-9


class TestScoreTextPair:
    def test_populates_every_field(self):
        scores = score_text_pair(seq(["the", "cat"]), seq(["the", "cat", "sat"]))
        assert abs(scores.bleu1 - 60.653065971263345) <= 1e-9
        assert abs(scores.bleu4 - 60.653065971263345) <= 1e-9
        assert abs(scores.rouge_l - 80.0) <= 1e-9
        assert abs(scores.meteor - 64.6551724137931) <= 1e-9
        assert abs(scores.token_f1 - 80.0) <= 1e-9
        assert abs(scores.token_recall - 66.66666666666666) <= 1e-9
        assert scores.close_accuracy == 0.0

    def test_identity_scores(self):
        scores = score_text_pair(seq(["a", "b", "c"]), seq(["a", "b", "c"]))
        assert scores.bleu1 == 100.0
        assert scores.rouge_l == 100.0
        assert scores.close_accuracy == 100.0
