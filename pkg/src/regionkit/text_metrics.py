"""Reference-based text metrics with bilingual tokenization.

All scores live on a 0..100 scale. Tokenization lowercases, replaces
punctuation with spaces, and then splits: English text on whitespace, text
containing CJK characters into one token per CJK character with Latin or
digit runs kept whole. Metrics are sentence level and deterministic; no
external resources are consulted.
"""

from __future__ import annotations

import enum
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

_CJK_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
)

METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5


class Language(enum.Enum):
    ENGLISH = "en"
    CHINESE = "zh"
    MIXED = "mixed"


@dataclass(frozen=True)
class TokenSequence:
    """Tokens plus the language rule that produced them."""

    tokens: tuple[str, ...]
    language: Language

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for token in self.tokens:
            if not token:
                raise ValueError("tokens must be non-empty strings")

    def __len__(self) -> int:
        return len(self.tokens)


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def _strip_punctuation(text: str) -> str:
    return "".join(
        " " if unicodedata.category(ch).startswith("P") else ch for ch in text
    )


def tokenize(text: str, language: Language = Language.ENGLISH) -> TokenSequence:
    """Lowercase, drop punctuation, and split according to language."""
    cleaned = _strip_punctuation(text.lower())
    if language is Language.ENGLISH:
        return TokenSequence(tuple(cleaned.split()), language)
    # Chinese and mixed text: each CJK character is its own token, while
    # embedded Latin or digit runs stay whole.
    tokens: list[str] = []
    run: list[str] = []
    for ch in cleaned:
        if ch.isspace():
            if run:
                tokens.append("".join(run))
                run = []
        elif _is_cjk(ch):
            if run:
                tokens.append("".join(run))
                run = []
            tokens.append(ch)
        else:
            run.append(ch)
    if run:
        tokens.append("".join(run))
    return TokenSequence(tuple(tokens), language)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)
    )


def bleu(candidate: TokenSequence, reference: TokenSequence, max_n: int = 4) -> float:
    """Sentence BLEU with uniform n-gram weights and add-one smoothing.

    Smoothing applies to orders above 1; a candidate with zero unigram
    overlap scores 0. The brevity penalty kicks in only when the candidate
    is shorter than the reference.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be positive, got {max_n}")
    cand, ref = candidate.tokens, reference.tokens
    if not cand or not ref:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(cand, n)
        ref_counts = _ngram_counts(ref, n)
        total = max(len(cand) - n + 1, 0)
        clipped = sum(
            min(count, ref_counts[gram]) for gram, count in cand_counts.items()
        )
        if n == 1:
            if clipped == 0:
                return 0.0
            precision = clipped / total
        else:
            precision = (clipped + 1) / (total + 1)
        log_sum += math.log(precision)
    brevity = 1.0
    if len(cand) < len(ref):
        brevity = math.exp(1.0 - len(ref) / len(cand))
    return 100.0 * brevity * math.exp(log_sum / max_n)


def rouge_l(candidate: TokenSequence, reference: TokenSequence) -> float:
    """Longest-common-subsequence F1 between candidate and reference."""
    cand, ref = candidate.tokens, reference.tokens
    if not cand or not ref:
        return 0.0
    previous = [0] * (len(ref) + 1)
    for c_tok in cand:
        current = [0]
        for j, r_tok in enumerate(ref):
            if c_tok == r_tok:
                current.append(previous[j] + 1)
            else:
                current.append(max(previous[j + 1], current[j]))
        previous = current
    lcs = previous[-1]
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 100.0 * 2.0 * precision * recall / (precision + recall)


def _greedy_alignment(cand: Sequence[str], ref: Sequence[str]) -> tuple[int, int]:
    """Exact-match alignment, preferring runs; returns (matches, chunks)."""
    positions: dict[str, list[int]] = {}
    for index, token in enumerate(ref):
        positions.setdefault(token, []).append(index)
    used = [False] * len(ref)
    matches = chunks = 0
    prev_c = prev_r = -2
    for c_index, token in enumerate(cand):
        available = [r for r in positions.get(token, ()) if not used[r]]
        if not available:
            continue
        if c_index == prev_c + 1 and prev_r + 1 in available:
            r_index = prev_r + 1
        else:
            r_index = available[0]
        used[r_index] = True
        matches += 1
        if not (c_index == prev_c + 1 and r_index == prev_r + 1):
            chunks += 1
        prev_c, prev_r = c_index, r_index
    return matches, chunks


def meteor_lite(candidate: TokenSequence, reference: TokenSequence) -> float:
    """Unigram METEOR: recall-weighted F-mean with a fragmentation penalty."""
    cand, ref = candidate.tokens, reference.tokens
    if not cand or not ref:
        return 0.0
    matches, chunks = _greedy_alignment(cand, ref)
    if matches == 0:
        return 0.0
    precision = matches / len(cand)
    recall = matches / len(ref)
    f_mean = precision * recall / (
        METEOR_ALPHA * precision + (1.0 - METEOR_ALPHA) * recall
    )
    penalty = METEOR_GAMMA * (chunks / matches) ** METEOR_BETA
    return 100.0 * f_mean * (1.0 - penalty)


@dataclass(frozen=True)
class VqaScores:
    """Token-overlap scores; close_accuracy only applies to closed questions."""

    token_f1: float
    token_recall: float
    close_accuracy: float | None


def vqa_scores(
    candidate: TokenSequence, reference: TokenSequence, closed: bool
) -> VqaScores:
    """Token multiset overlap plus exact-match accuracy for closed questions."""
    cand, ref = candidate.tokens, reference.tokens
    if not ref:
        return VqaScores(0.0, 0.0, 0.0 if closed else None)
    overlap = sum((Counter(cand) & Counter(ref)).values())
    recall = overlap / len(ref)
    precision = overlap / len(cand) if cand else 0.0
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    close = None
    if closed:
        close = 100.0 if cand == ref else 0.0
    return VqaScores(100.0 * f1, 100.0 * recall, close)


@dataclass(frozen=True)
class TextScores:
    """The full battery of text metrics for one candidate/reference pair."""

    bleu1: float
    bleu4: float
    rouge_l: float
    meteor: float
    token_f1: float
    token_recall: float
    close_accuracy: float


def score_text_pair(candidate: TokenSequence, reference: TokenSequence) -> TextScores:
    """Compute every text metric at once; aggregation chooses what to report."""
    vqa = vqa_scores(candidate, reference, closed=True)
    return TextScores(
        bleu1=bleu(candidate, reference, max_n=1),
        bleu4=bleu(candidate, reference, max_n=4),
        rouge_l=rouge_l(candidate, reference),
        meteor=meteor_lite(candidate, reference),
        token_f1=vqa.token_f1,
        token_recall=vqa.token_recall,
        close_accuracy=vqa.close_accuracy if vqa.close_accuracy is not None else 0.0,
    )
