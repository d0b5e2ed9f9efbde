"""Corpus data model and dataset preparation.

Preparation turns a raw manifest into evaluation-ready data: overlapping
speech is dropped, transcripts are cleaned, utterances are sorted into
language settings, short utterances are merged, and dev/test speakers get
enrollment and trial subsets.
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .audio import AudioBuffer, concatenate
from .text import CMN, ENG, LANGUAGES, SPA, Transcript

log = logging.getLogger(__name__)

GENDERS = ("F", "M")
SPLITS = ("train", "dev", "test")
SUBSETS = ("enroll", "trial", "unassigned")
LANG_SETTINGS = ("EN", "ZH", "ES", "CS", "unknown")
SETTING_OF_TAG = {ENG: "EN", CMN: "ZH", SPA: "ES"}


class ManifestError(ValueError):
    pass


class EnrollmentError(ValueError):
    pass


@dataclass
class Utterance:
    utt_id: str
    speaker_id: str
    gender: str
    split: str
    audio_path: str = ""
    transcript: str = ""
    lang_setting: str = "unknown"
    subset: str = "unassigned"
    annotations: set[str] = field(default_factory=set)
    duration_s: float = 0.0

    def __post_init__(self):
        self.annotations = set(self.annotations)
        for name, value, allowed in (
            ("gender", self.gender, GENDERS),
            ("split", self.split, SPLITS),
            ("subset", self.subset, SUBSETS),
            ("lang_setting", self.lang_setting, LANG_SETTINGS),
        ):
            if value not in allowed:
                raise ValueError(f"{self.utt_id}: {name} must be one of {allowed}, got {value!r}")
        if self.duration_s < 0:
            raise ValueError(f"{self.utt_id}: negative duration")
        if self.subset != "unassigned" and self.split == "train":
            raise ValueError(f"{self.utt_id}: train utterances cannot be enroll/trial")

    def to_json(self) -> str:
        d = asdict(self)
        d["annotations"] = sorted(self.annotations)
        return json.dumps(d, ensure_ascii=False, sort_keys=False)


_FIELDS = {f for f in Utterance.__dataclass_fields__}


@dataclass
class CorpusManifest:
    utterances: list[Utterance] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        seen = set()
        for u in self.utterances:
            if u.utt_id in seen:
                raise ManifestError(f"duplicate utt_id {u.utt_id!r}")
            seen.add(u.utt_id)

    def __len__(self):
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def by_id(self) -> dict[str, Utterance]:
        return {u.utt_id: u for u in self.utterances}

    def select(self, **criteria) -> list[Utterance]:
        return [u for u in self.utterances if all(getattr(u, k) == v for k, v in criteria.items())]


def load_manifest(path, name: str | None = None) -> CorpusManifest:
    utts: list[Utterance] = []
    first_line: dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                utt = Utterance(**{k: v for k, v in raw.items() if k in _FIELDS})
            except (json.JSONDecodeError, TypeError, ValueError) as e:
                raise ManifestError(f"{path}:{n}: {e}") from e
            if utt.utt_id in first_line:
                raise ManifestError(
                    f"{path}:{n}: duplicate utt_id {utt.utt_id!r} (first seen on line {first_line[utt.utt_id]})"
                )
            first_line[utt.utt_id] = n
            utts.append(utt)
    return CorpusManifest(utts, name if name is not None else Path(path).stem)


def save_manifest(manifest: CorpusManifest, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for u in manifest.utterances:
            f.write(u.to_json() + "\n")


def read_list_file(path) -> list[str]:
    """One entry per line; blank lines and '#' comments are skipped."""
    with open(path, encoding="utf-8") as f:
        lines = [line.strip() for line in f]
    return [line for line in lines if line and not line.startswith("#")]


# -------------------------------------------------------- transcript cleanup


def clean_transcript(raw: str, particle_list: Iterable[str] = (), annotation_patterns: Iterable = ()) -> str:
    """Strip annotation markup and discourse particles from a transcript.

    >>> clean_transcript("oh I went there", {"oh"})
    'I went there'
    """
    text = raw
    for pat in annotation_patterns:
        text = re.sub(pat, " ", text)
    particles = {p.lower() for p in particle_list}
    words = [w for w in text.split() if w.lower() not in particles]
    return " ".join(words)


# ---------------------------------------------------------- language setting


def partition_language_setting(transcript: Transcript, matrix: str = "EN") -> str:
    """EN/ZH/ES for monolingual token tags, CS when two languages occur.

    Transcripts without any language-tagged token fall back to `matrix`.
    """
    langs = {t for t in transcript.tags if t in LANGUAGES}
    if len(langs) >= 2:
        return "CS"
    if not langs:
        if matrix not in ("EN", "ZH", "ES"):
            raise ValueError(f"matrix language setting must be EN, ZH or ES, got {matrix!r}")
        return matrix
    return SETTING_OF_TAG[langs.pop()]


# ----------------------------------------------------- short utterance merge


@dataclass
class MergeReport:
    merged: list[list[str]] = field(default_factory=list)
    dropped: list[str] = field(default_factory=list)
    failed: dict[str, str] = field(default_factory=dict)


def concat_short_utterances(
    items: list[tuple[Utterance, AudioBuffer | Callable[[], AudioBuffer]]],
    min_duration_s: float = 2.0,
    loudness_tol_db: float = 3.0,
    gap_s: float = 0.1,
    report: MergeReport | None = None,
) -> list[tuple[Utterance, AudioBuffer | Callable[[], AudioBuffer] | None]]:
    """Merge utterances shorter than `min_duration_s` with other short ones.

    Shorts are visited in ascending duration. Each one seeds a group and
    absorbs the next shortest utterances whose RMS level is within
    `loudness_tol_db` of the seed until the group is long enough. Groups that
    stay too short are dropped.

    `items` must all belong to one speaker and language setting. Audio may be
    given lazily as a zero-argument callable; it is only loaded for shorts.
    Long utterances pass through with their audio untouched.
    """
    report = report if report is not None else MergeReport()
    out: list = []
    shorts = []
    for utt, audio in items:
        if utt.duration_s >= min_duration_s:
            out.append((utt, audio))
            continue
        try:
            buf = audio() if callable(audio) else audio
        except (OSError, ValueError) as e:
            report.failed[utt.utt_id] = str(e)
            continue
        shorts.append((buf.duration_s, utt.utt_id, utt, buf, buf.rms_db()))
    shorts.sort(key=lambda s: (s[0], s[1]))

    while shorts:
        dur, _, seed_utt, seed_buf, seed_db = shorts.pop(0)
        group = [(seed_utt, seed_buf)]
        while dur < min_duration_s:
            j = next((k for k, s in enumerate(shorts) if abs(s[4] - seed_db) <= loudness_tol_db), None)
            if j is None:
                break
            d, _, u, b, _ = shorts.pop(j)
            group.append((u, b))
            dur += round(gap_s * b.sample_rate_hz) / b.sample_rate_hz + d
        if len(group) == 1 or dur < min_duration_s:
            report.dropped.extend(u.utt_id for u, _ in group)
            continue
        report.merged.append([u.utt_id for u, _ in group])
        out.append(_merge(group, gap_s))
    return out


def _merge(group, gap_s):
    utts = [u for u, _ in group]
    audio = concatenate([b for _, b in group], gap_s)
    first = utts[0]
    merged = Utterance(
        utt_id="+".join(u.utt_id for u in utts),
        speaker_id=first.speaker_id,
        gender=first.gender,
        split=first.split,
        audio_path=first.audio_path,
        transcript=" ".join(u.transcript for u in utts if u.transcript),
        lang_setting=first.lang_setting,
        subset=first.subset,
        annotations=set().union(*(u.annotations for u in utts)),
        duration_s=audio.duration_s,
    )
    return merged, audio


# ------------------------------------------------------ enrollment and trials


def n_enroll_for(count: int, n_enroll_range=(4, 10)) -> int:
    lo, hi = n_enroll_range
    return int(min(max(count // 4, lo), hi))


def _stable_seed(seed: int, *keys: str) -> int:
    h = hashlib.sha256("\x1f".join(keys).encode("utf-8")).digest()
    return seed ^ int.from_bytes(h[:8], "little")


def split_enroll_trial(manifest: CorpusManifest, n_enroll_range=(4, 10), seed: int = 0) -> CorpusManifest:
    """Assign dev/test utterances to enroll or trial, per speaker and setting.

    count // 4 utterances (clamped to `n_enroll_range`) are drawn at random
    for enrollment. The draw depends only on the seed and the set of
    utterance ids, so reruns give the same split.
    """
    lo, hi = n_enroll_range
    if not 1 <= lo <= hi:
        raise ValueError(f"invalid enrollment range {n_enroll_range}")
    groups: dict[tuple, list[Utterance]] = defaultdict(list)
    for u in manifest.utterances:
        if u.split in ("dev", "test"):
            groups[(u.split, u.speaker_id, u.lang_setting)].append(u)

    assignment: dict[str, str] = {}
    for (split, spk, setting), utts in sorted(groups.items()):
        if len(utts) < lo + 1:
            raise EnrollmentError(
                f"speaker {spk} ({split}, {setting}) has {len(utts)} utterances, needs at least {lo + 1}"
            )
        utts = sorted(utts, key=lambda u: u.utt_id)
        n = n_enroll_for(len(utts), n_enroll_range)
        rng = np.random.default_rng(_stable_seed(seed, split, spk, setting))
        chosen = set(rng.permutation(len(utts))[:n].tolist())
        for i, u in enumerate(utts):
            assignment[u.utt_id] = "enroll" if i in chosen else "trial"

    out = []
    for u in manifest.utterances:
        new = Utterance(**{**asdict(u), "annotations": set(u.annotations)})
        new.subset = assignment.get(u.utt_id, "unassigned")
        out.append(new)
    return CorpusManifest(out, manifest.name)


# ------------------------------------------------------------------- summary


def corpus_counts(manifest: CorpusManifest, settings=("EN", "ZH", "CS")) -> dict:
    """Speaker and utterance counts per split x gender x setting x subset."""
    rows = {}
    for split in SPLITS:
        for gender in GENDERS:
            utts = manifest.select(split=split, gender=gender)
            if not utts:
                continue
            row = {"n_speakers": len({u.speaker_id for u in utts})}
            for s in settings:
                in_s = [u for u in utts if u.lang_setting == s]
                if split == "train":
                    row[s] = {"all": len(in_s)}
                else:
                    row[s] = {sub: sum(u.subset == sub for u in in_s) for sub in ("enroll", "trial")}
            rows[f"{split}/{gender}"] = row
    return rows
