"""Levenshtein alignment and the WER/CER/MER/PER family of error rates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .pinyin import PinyinTable, han_to_pinyin
from .text import CMN, tokenize_mixed


class EmptyReferenceError(ValueError):
    """Raised when an error rate would divide by an empty reference."""


@dataclass(frozen=True)
class AlignmentCounts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    ref_len: int = 0

    def __post_init__(self):
        if min(self.substitutions, self.deletions, self.insertions, self.ref_len) < 0:
            raise ValueError("alignment counts must be non-negative")
        if self.substitutions + self.deletions > self.ref_len:
            raise ValueError("S + D cannot exceed the reference length")

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def rate(self) -> float:
        if self.ref_len == 0:
            raise EmptyReferenceError("error rate undefined for an empty reference")
        return self.errors / self.ref_len

    def __add__(self, other: "AlignmentCounts") -> "AlignmentCounts":
        return AlignmentCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.ref_len + other.ref_len,
        )


@dataclass
class ErrorRateReport:
    kind: str
    counts: AlignmentCounts
    per_utterance: list[float] = field(default_factory=list)

    @property
    def rate(self) -> float:
        return self.counts.rate


# traceback moves
_DIAG, _UP, _LEFT = 0, 1, 2


def align(ref: Sequence, hyp: Sequence) -> AlignmentCounts:
    """Minimum-edit alignment with unit costs.

    Among alignments of equal cost the one with the fewest insertions plus
    deletions (i.e. the most substitutions) wins, so the S/D/I split is
    unique.
    """
    n, m = len(ref), len(hyp)
    if n == 0:
        raise EmptyReferenceError("cannot align against an empty reference")
    # cost = edits * big + indels orders like the tuple (edits, indels)
    # because indels never exceed n + m
    big = n + m + 1
    step = big + 1
    prev = [j * step for j in range(m + 1)]
    back = [[_LEFT] * (m + 1)]
    for i in range(1, n + 1):
        r = ref[i - 1]
        row = [i * step] + [0] * m
        brow = [_UP] + [_DIAG] * m
        left = row[0]
        for j in range(1, m + 1):
            best = prev[j - 1] if r == hyp[j - 1] else prev[j - 1] + big
            up = prev[j] + step
            if up < best:
                best = up
                brow[j] = _UP
            if left + step < best:
                best = left + step
                brow[j] = _LEFT
            row[j] = left = best
        back.append(brow)
        prev = row

    s = dl = ins = 0
    i, j = n, m
    while i or j:
        move = back[i][j]
        if move == _DIAG:
            if ref[i - 1] != hyp[j - 1]:
                s += 1
            i, j = i - 1, j - 1
        elif move == _UP:
            dl += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return AlignmentCounts(s, dl, ins, n)


def mer_units(text: str, table: PinyinTable, tones: bool = False) -> list[str]:
    """Scoring units for MER: Pinyin per Han character, words otherwise."""
    units = []
    for tok in tokenize_mixed(text).tokens:
        units.append(han_to_pinyin(tok, table, tones) if tok.lang == CMN else tok.surface)
    return units


def mer(ref_text: str, hyp_text: str, table: PinyinTable, tones: bool = False) -> ErrorRateReport:
    ref = mer_units(ref_text, table, tones)
    if not ref:
        raise EmptyReferenceError("reference is empty after tokenization")
    counts = align(ref, mer_units(hyp_text, table, tones))
    return ErrorRateReport("MER", counts, [counts.rate])


def wer(ref_text: str, hyp_text: str) -> ErrorRateReport:
    ref, hyp = ref_text.split(), hyp_text.split()
    counts = align(ref, hyp)
    return ErrorRateReport("WER", counts, [counts.rate])


def cer(ref_text: str, hyp_text: str) -> ErrorRateReport:
    ref = [c for c in ref_text if not c.isspace()]
    counts = align(ref, [c for c in hyp_text if not c.isspace()])
    return ErrorRateReport("CER", counts, [counts.rate])


def per(ref_phones: Sequence[str], hyp_phones: Sequence[str]) -> ErrorRateReport:
    counts = align(list(ref_phones), list(hyp_phones))
    return ErrorRateReport("PER", counts, [counts.rate])


def corpus_rate(counts: Sequence[AlignmentCounts], kind: str = "MER") -> ErrorRateReport:
    """Pool utterance counts: sum of errors over sum of reference lengths."""
    if not counts:
        raise ValueError("corpus_rate needs at least one utterance")
    total = AlignmentCounts()
    for c in counts:
        total = total + c
    return ErrorRateReport(kind, total, [c.rate for c in counts])
