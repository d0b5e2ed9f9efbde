"""Language tagging, code-switching points and annotation ablations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .corpus import read_list_file
from .metrics import AlignmentCounts, corpus_rate
from .stats import mann_whitney_u_one_sided
from .text import CMN, ENG, LANGUAGES, NEUTRAL, OTHER, SPA, Token, Transcript, is_han

# categories and the direction each is tested in against the total
CATEGORIES = ("reduced", "zero", "equal")
DIRECTIONS = {"reduced": "greater", "zero": "greater", "equal": "less"}


@dataclass
class LanguageLexicon:
    language: str
    words: frozenset[str]

    def __post_init__(self):
        if self.language not in (ENG, SPA):
            raise ValueError(f"lexicons are for ENG or SPA, got {self.language!r}")
        self.words = frozenset(w.lower() for w in self.words)
        if not self.words:
            raise ValueError(f"{self.language} lexicon is empty")

    @classmethod
    def from_file(cls, language: str, path) -> "LanguageLexicon":
        return cls(language, frozenset(read_list_file(path)))

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.words


def tag_tokens(
    transcript: Transcript,
    lexicons: Iterable[LanguageLexicon] = (),
    matrix_lang: str = ENG,
    unknown_lang: str = OTHER,
) -> Transcript:
    """Assign ENG/SPA/CMN tags to the tokens of a transcript.

    Han characters are CMN. A Latin word found in exactly one lexicon gets
    that language; a word in both takes the tag of its nearest tagged
    neighbour (left side first, then right), else `matrix_lang`. Words in no
    lexicon get `unknown_lang` (OTHER by default). NEUTRAL tokens are kept.
    """
    if matrix_lang not in (ENG, SPA):
        raise ValueError("matrix_lang must be ENG or SPA")
    if unknown_lang not in (ENG, SPA, OTHER):
        raise ValueError("unknown_lang must be ENG, SPA or OTHER")
    lexicons = list(lexicons)
    tags: list[str | None] = []
    for tok in transcript.tokens:
        if tok.lang == NEUTRAL:
            tags.append(NEUTRAL)
        elif all(is_han(c) for c in tok.surface):
            tags.append(CMN)
        else:
            hits = {lex.language for lex in lexicons if tok.surface in lex}
            if len(hits) == 1:
                tags.append(hits.pop())
            elif hits:
                tags.append(None)  # ambiguous, resolved below
            else:
                tags.append(unknown_lang)

    resolved = list(tags)
    for i, tag in enumerate(tags):
        if tag is not None:
            continue
        left = next((t for t in reversed(tags[:i]) if t in (ENG, SPA)), None)
        right = next((t for t in tags[i + 1 :] if t in (ENG, SPA)), None)
        resolved[i] = left or right or matrix_lang
    tokens = [Token(tok.surface, tag) for tok, tag in zip(transcript.tokens, resolved)]
    return Transcript(tokens, transcript.utt_id)


def count_csp(transcript: Transcript | list[str]) -> int:
    """Language changes between consecutive language-tagged tokens.

    NEUTRAL and OTHER tokens are skipped rather than treated as boundaries.
    """
    tags = transcript.tags if isinstance(transcript, Transcript) else transcript
    langs = [t for t in tags if t in LANGUAGES]
    return sum(a != b for a, b in zip(langs, langs[1:]))


@dataclass(frozen=True)
class CspRecord:
    utt_id: str
    csp_orig: int
    csp_anon: int
    mer: float

    @property
    def category(self) -> str:
        if self.csp_anon < self.csp_orig:
            return "reduced"
        if self.csp_anon == self.csp_orig:
            return "equal"
        return "increased"


@dataclass
class CspAggregate:
    n_total: int
    n_reduced: int
    n_zero: int
    n_equal: int
    n_increased: int
    mean_csp_orig: float
    mean_csp_anon: float
    mer_total: float
    mer_reduced: float | None
    mer_zero: float | None
    mer_equal: float | None
    p_values: dict[str, float] = field(default_factory=dict)
    # utterances left out because the original transcript had no switch
    n_excluded_zero_orig: int = 0
    records: list[CspRecord] = field(default_factory=list)

    @property
    def excluded_fraction(self) -> float:
        n = self.n_total + self.n_excluded_zero_orig
        return self.n_excluded_zero_orig / n if n else 0.0

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "records"}
        d["excluded_fraction"] = self.excluded_fraction
        return d


def _in_category(rec: CspRecord, cat: str) -> bool:
    if cat == "zero":
        return rec.csp_anon == 0
    return rec.category == cat


def csp_compare(
    orig: Mapping[str, Transcript],
    anon: Mapping[str, Transcript],
    mer_per_utt: Mapping[str, AlignmentCounts],
) -> CspAggregate:
    """Compare switch counts before/after anonymization, with per-category MER.

    Only utterances whose original transcript contains a switch are
    aggregated. Each category's per-utterance MERs are tested against those
    of all utterances with a one-sided Mann-Whitney U test (higher MER for
    reduced/zero, lower for equal).
    """
    missing = sorted(set(orig) ^ set(anon)) + sorted(set(orig) - set(mer_per_utt))
    if missing:
        raise KeyError(f"utterance ids not present in all inputs: {', '.join(dict.fromkeys(missing))}")
    records, excluded = [], 0
    for utt_id in sorted(orig):
        o, a = count_csp(orig[utt_id]), count_csp(anon[utt_id])
        if o == 0:
            excluded += 1
            continue
        records.append(CspRecord(utt_id, o, a, mer_per_utt[utt_id].rate))
    if not records:
        raise ValueError("no utterance has a code-switching point in the original transcript")

    def pooled(recs):
        return corpus_rate([mer_per_utt[r.utt_id] for r in recs]).rate if recs else None

    groups = {cat: [r for r in records if _in_category(r, cat)] for cat in CATEGORIES}
    all_mer = [r.mer for r in records]
    p_values = {}
    for cat, recs in groups.items():
        if recs:
            test = mann_whitney_u_one_sided([r.mer for r in recs], all_mer, DIRECTIONS[cat])
            p_values[cat] = test.p
    n = len(records)
    return CspAggregate(
        n_total=n,
        n_reduced=len(groups["reduced"]),
        n_zero=len(groups["zero"]),
        n_equal=len(groups["equal"]),
        n_increased=sum(r.category == "increased" for r in records),
        mean_csp_orig=sum(r.csp_orig for r in records) / n,
        mean_csp_anon=sum(r.csp_anon for r in records) / n,
        mer_total=pooled(records),
        mer_reduced=pooled(groups["reduced"]),
        mer_zero=pooled(groups["zero"]),
        mer_equal=pooled(groups["equal"]),
        p_values=p_values,
        n_excluded_zero_orig=excluded,
        records=records,
    )


@dataclass
class AblationReport:
    flags: list[str]
    n_before: int
    n_after: int
    mer_before: float
    mer_after: float

    @property
    def size_fraction(self) -> float:
        return self.n_after / self.n_before

    @property
    def relative_change(self) -> float:
        return (self.mer_after - self.mer_before) / self.mer_before if self.mer_before else 0.0

    def to_dict(self) -> dict:
        return {**self.__dict__, "size_fraction": self.size_fraction, "relative_change": self.relative_change}

    def describe(self) -> str:
        direction = "reduced" if self.relative_change < 0 else "increased"
        return (
            f"{self.size_fraction:.0%} of utterances remain; MER {direction} by "
            f"{abs(self.relative_change):.0%} ({self.mer_before:.2%} -> {self.mer_after:.2%})"
        )


def subset_ablation(utterances, mer_per_utt: Mapping[str, AlignmentCounts], flags: Iterable[str]) -> AblationReport:
    """Pooled MER before and after removing utterances carrying any of `flags`."""
    flags = sorted(set(flags))
    scored = [u for u in utterances if u.utt_id in mer_per_utt]
    if not scored:
        raise ValueError("no scored utterances to ablate")
    kept = [u for u in scored if not (u.annotations & set(flags))]
    if not kept:
        raise ValueError(f"removing {flags} leaves no utterances")
    before = corpus_rate([mer_per_utt[u.utt_id] for u in scored]).rate
    after = corpus_rate([mer_per_utt[u.utt_id] for u in kept]).rate
    return AblationReport(flags, len(scored), len(kept), before, after)
