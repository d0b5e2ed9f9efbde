"""Mixed-script tokenization for Mandarin/English/Spanish transcripts.

Han characters become one token each, runs of other letters become word
tokens, digit runs become NEUTRAL tokens and everything else is dropped.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field

ENG, CMN, SPA, OTHER, NEUTRAL = "ENG", "CMN", "SPA", "OTHER", "NEUTRAL"
LANG_TAGS = (ENG, CMN, SPA, OTHER, NEUTRAL)
# tags that name an actual language; OTHER and NEUTRAL are transparent
LANGUAGES = (ENG, CMN, SPA)

_HAN_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2FA1F),
    (0x30000, 0x323AF),
)
_APOSTROPHES = "'’ʼ"


def is_han(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _HAN_RANGES)


@dataclass(frozen=True)
class Token:
    surface: str
    lang: str = OTHER

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if self.lang not in LANG_TAGS:
            raise ValueError(f"unknown language tag {self.lang!r}")


@dataclass
class Transcript:
    tokens: list[Token] = field(default_factory=list)
    utt_id: str = ""

    @property
    def tags(self) -> list[str]:
        return [t.lang for t in self.tokens]

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def __len__(self):
        return len(self.tokens)


def tokenize_mixed(text: str, utt_id: str = "") -> Transcript:
    """Split `text` into Han characters, lowercased words and digit runs.

    >>> [(t.surface, t.lang) for t in tokenize_mixed("我like这个").tokens]
    [('我', 'CMN'), ('like', 'OTHER'), ('这', 'CMN'), ('个', 'CMN')]
    """
    text = unicodedata.normalize("NFC", text)
    for a in _APOSTROPHES:
        text = text.replace(a, "")
    tokens: list[Token] = []
    buf: list[str] = []
    buf_kind = None

    def flush():
        nonlocal buf, buf_kind
        if buf:
            word = "".join(buf)
            if buf_kind == "word":
                tokens.append(Token(word.lower(), OTHER))
            else:
                tokens.append(Token(word, NEUTRAL))
        buf, buf_kind = [], None

    for ch in text:
        if is_han(ch):
            flush()
            tokens.append(Token(ch, CMN))
            continue
        cat = unicodedata.category(ch)
        if cat.startswith("L") or (cat.startswith("M") and buf_kind == "word"):
            kind = "word"
        elif cat == "Nd":
            kind = "digit"
        else:
            flush()
            continue
        if kind != buf_kind:
            flush()
            buf_kind = kind
        buf.append(ch)
    flush()
    return Transcript(tokens, utt_id)


def parse_tagged(line: str, utt_id: str = "") -> Transcript:
    """Parse space-separated ``surface/TAG`` pairs (pre-tagged transcripts)."""
    tokens = []
    for item in line.split():
        surface, sep, tag = item.rpartition("/")
        if not sep or not surface:
            raise ValueError(f"malformed tagged token {item!r}")
        tokens.append(Token(surface, tag.upper()))
    return Transcript(tokens, utt_id)


def format_tagged(transcript: Transcript) -> str:
    return " ".join(f"{t.surface}/{t.lang}" for t in transcript.tokens)
