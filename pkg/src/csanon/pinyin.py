"""Han character to Pinyin lookup backed by a codepoint/readings TSV."""
from __future__ import annotations

import unicodedata
from importlib import resources

from .text import CMN, Token

# combining grave, acute, macron, caron; the diaeresis of ü is kept
_TONE_MARKS = {"̀", "́", "̄", "̌"}


def strip_tones(syllable: str) -> str:
    decomposed = unicodedata.normalize("NFD", syllable)
    return unicodedata.normalize("NFC", "".join(c for c in decomposed if c not in _TONE_MARKS))


class PinyinTable:
    """Maps Han codepoints to their readings, most common reading first.

    ``unmapped`` counts lookups of characters missing from the table.
    """

    def __init__(self, readings: dict[int, list[str]]):
        self.readings = readings
        self.unmapped = 0

    @classmethod
    def from_tsv(cls, path) -> "PinyinTable":
        with open(path, encoding="utf-8") as f:
            return cls(_parse(f))

    @classmethod
    def default(cls) -> "PinyinTable":
        src = resources.files("csanon") / "data" / "pinyin.tsv"
        with src.open(encoding="utf-8") as f:
            return cls(_parse(f))

    def __contains__(self, ch: str) -> bool:
        return ord(ch) in self.readings

    def __len__(self):
        return len(self.readings)


def _parse(lines) -> dict[int, list[str]]:
    table = {}
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            cp, readings = line.split("\t")
            cp = cp.upper().removeprefix("U+")
            table[int(cp, 16)] = [r.strip() for r in readings.split(",") if r.strip()]
        except ValueError as e:
            raise ValueError(f"pinyin table line {n}: {line!r}") from e
    return table


def han_to_pinyin(token: Token, table: PinyinTable, tones: bool = False) -> str:
    """Romanize a single Han token with its first (most common) reading.

    Characters missing from the table are returned unchanged and counted in
    ``table.unmapped``.
    """
    if token.lang != CMN:
        raise ValueError(f"expected a CMN token, got {token.lang}")
    readings = table.readings.get(ord(token.surface[0])) if len(token.surface) == 1 else None
    if not readings:
        table.unmapped += 1
        return token.surface
    return readings[0] if tones else strip_tones(readings[0])
