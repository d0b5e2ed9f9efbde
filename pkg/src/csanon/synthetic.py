"""Synthetic speech-like audio and a small code-switching mini-corpus.

Nothing here is meant to sound like speech; it only has to have voiced
excitation, moving formants and pauses so the DSP and the pipeline have
something realistic to chew on.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.signal

from .audio import AudioBuffer, write_wav
from .corpus import CorpusManifest, Utterance, save_manifest
from .metrics import mer_units
from .pinyin import PinyinTable

EN_WORDS = (
    "i went to the market yesterday and bought some fruit we should meet after class "
    "my brother works in the city she likes to read books on the weekend this is very "
    "good food the weather today is hot can you help me with my homework"
).split()
ZH_CHARS = list("我你他她们去了这个那是的好很不在有吃饭学校老师朋友今天明天工作喜欢看书家里买东西")
PARTICLES = ("oh", "lah", "leh", "uh")
MARKUP = ("[laugh]", "<noise>", "(ppb)")
FLAGS = ("abbreviation", "foreign_word", "filled_pause", "repetition")


@dataclass(frozen=True)
class Voice:
    f0: float
    formant_scale: float


SPEAKERS = {
    "spk01": ("F", Voice(215.0, 1.15)),
    "spk02": ("F", Voice(190.0, 1.10)),
    "spk03": ("M", Voice(115.0, 0.95)),
    "spk04": ("M", Voice(132.0, 1.00)),
}
# vowel-ish formant triples (Hz) for a neutral voice
_VOWELS = ((730, 1090, 2440), (270, 2290, 3010), (300, 870, 2240), (530, 1840, 2480), (570, 840, 2410))


def resonator(freq_hz: float, bandwidth_hz: float, rate: int) -> np.ndarray:
    """Denominator of a two-pole resonator."""
    r = np.exp(-np.pi * bandwidth_hz / rate)
    theta = 2 * np.pi * freq_hz / rate
    return np.array([1.0, -2 * r * np.cos(theta), r * r])


def speech_like(duration_s: float, rate: int = 16000, voice: Voice = Voice(150.0, 1.0), seed: int = 0,
                level: float = 0.08) -> AudioBuffer:
    """Pulse train through moving formants, scaled to RMS `level`."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * rate))
    syl = int(0.16 * rate)
    out = np.zeros(n)
    phase = 0.0
    for start in range(0, n, syl):
        stop = min(start + syl, n)
        m = stop - start
        # voiced syllable or short pause
        if rng.random() < 0.15:
            out[start:stop] = 0.003 * rng.standard_normal(m)
            continue
        f0 = voice.f0 * (1 + 0.08 * rng.standard_normal()) * np.linspace(1.0, 0.93, m)
        ph = phase + np.cumsum(f0 / rate)
        phase = ph[-1] % 1.0
        pulses = np.diff(np.floor(ph), prepend=np.floor(ph[0])).astype(float)
        exc = pulses + 0.02 * rng.standard_normal(m)
        y = exc
        vowel = _VOWELS[rng.integers(len(_VOWELS))]
        for k, f in enumerate(vowel):
            y = scipy.signal.lfilter([1.0], resonator(f * voice.formant_scale, 60 + 40 * k, rate), y)
        env = np.sin(np.linspace(0, np.pi, m)) ** 0.5
        out[start:stop] = y * env
    rms = np.sqrt(np.mean(out**2))
    if rms > 0:
        out *= level / rms
    return AudioBuffer(np.clip(out, -0.99, 0.99), rate, "pcm16")


def single_resonance(freq_hz: float = 500.0, duration_s: float = 10.0, rate: int = 16000,
                     radius: float = 0.99, seed: int = 0) -> AudioBuffer:
    """White noise through one two-pole resonator at `freq_hz`."""
    rng = np.random.default_rng(seed)
    theta = 2 * np.pi * freq_hz / rate
    x = scipy.signal.lfilter([1.0], [1.0, -2 * radius * np.cos(theta), radius**2],
                             rng.standard_normal(int(duration_s * rate)))
    return AudioBuffer(0.8 * x / np.max(np.abs(x)), rate)


# ------------------------------------------------------------ mini corpus


def _sentence(rng, setting: str) -> str:
    if setting == "EN":
        words = list(rng.choice(EN_WORDS, rng.integers(4, 9)))
    elif setting == "ZH":
        words = list(rng.choice(ZH_CHARS, rng.integers(5, 11)))
    else:
        words = []
        for _ in range(rng.integers(2, 4)):
            words += list(rng.choice(ZH_CHARS, rng.integers(2, 4)))
            words += list(rng.choice(EN_WORDS, rng.integers(1, 3)))
    if rng.random() < 0.3:
        words.insert(0, str(rng.choice(PARTICLES)))
    if rng.random() < 0.3:
        words.insert(int(rng.integers(len(words) + 1)), str(rng.choice(MARKUP)))
    return " ".join(words)


def make_mini_corpus(out_dir, n_regular: int = 10, seed: int = 0, rate: int = 16000) -> Path:
    """Write a raw test-split corpus: manifest, WAVs and the config lists.

    Per speaker and setting there are `n_regular` utterances of 2.0-2.6 s
    and two shorts that can only reach 2 s by being merged. One group also
    gets an extra quiet short with no merge partner, and every speaker has an
    overlap-flagged utterance that preparation must drop.
    """
    out = Path(out_dir)
    rng = np.random.default_rng(seed)
    utts = []
    k = 0

    def add(spk, setting, dur, level=0.08, flags=()):
        nonlocal k
        gender, voice = SPEAKERS[spk]
        utt_id = f"{spk}_{setting}_{k:03d}"
        k += 1
        audio = speech_like(dur, rate, voice, seed=seed * 100003 + k, level=level)
        write_wav(out / "wav" / f"{utt_id}.wav", audio)
        utts.append(Utterance(
            utt_id=utt_id, speaker_id=spk, gender=gender, split="test",
            audio_path=f"wav/{utt_id}.wav", transcript=_sentence(rng, setting),
            annotations=set(flags), duration_s=audio.duration_s,
        ))

    for spk in SPEAKERS:
        for setting in ("EN", "ZH", "CS"):
            for _ in range(n_regular):
                flags = [str(rng.choice(FLAGS))] if rng.random() < 0.3 else []
                add(spk, setting, float(rng.uniform(2.0, 2.6)), flags=flags)
            add(spk, setting, 0.95)
            add(spk, setting, 1.0)
        add(spk, "EN", 2.2, flags=["overlap"])
    add("spk01", "ZH", 0.8, level=0.004)

    save_manifest(CorpusManifest(utts, "mini"), out / "raw_manifest.jsonl")
    (out / "particles.txt").write_text("# discourse particles\n" + "\n".join(PARTICLES) + "\n", encoding="utf-8")
    (out / "patterns.txt").write_text(
        "# annotation markup (regular expressions)\n\\[[^\\]]*\\]\n<[^>]*>\n\\([^)]*\\)\n", encoding="utf-8")
    (out / "eng_lexicon.txt").write_text("\n".join(sorted(set(EN_WORDS))) + "\n", encoding="utf-8")
    (out / "ablation_flags.json").write_text(
        json.dumps({"transcription_phenomena": ["abbreviation", "foreign_word", "filled_pause"]}, indent=2) + "\n",
        encoding="utf-8")
    return out


def _phones(text: str, table: PinyinTable) -> str:
    # letters of each scoring unit stand in for a phonemizer's output
    return " ".join(ch for unit in mer_units(text, table) for ch in unit)


def make_model_outputs(manifest: CorpusManifest, out_dir, dim: int = 192, seed: int = 0) -> Path:
    """Stand-ins for the external models, written next to a prepared corpus.

    * ``embeddings.jsonl``: random unit vectors with no speaker information
    * ``hyps_orig.tsv``: ASR output identical to the references
    * ``hyps_anon.tsv``: ASR output where code-switching was partly lost
    * ``phones_ref.tsv`` / ``phones_hyp.tsv``: identical phone strings
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    table = PinyinTable.default()
    utts = sorted(manifest.utterances, key=lambda u: u.utt_id)

    with open(out / "embeddings.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for u in utts:
            v = rng.standard_normal(dim)
            v /= np.linalg.norm(v)
            f.write(json.dumps({"utt_id": u.utt_id, "embedding": [round(float(x), 6) for x in v]}) + "\n")

    def write_tsv(name, rows):
        with open(out / name, "w", encoding="utf-8", newline="\n") as f:
            for utt_id, text in rows:
                f.write(f"{utt_id}\t{text}\n")

    write_tsv("hyps_orig.tsv", [(u.utt_id, u.transcript) for u in utts])
    anon = []
    for u in utts:
        words = u.transcript.split()
        if u.lang_setting == "CS":
            mode = rng.integers(3)
            if mode == 0:  # English dropped entirely
                words = [w for w in words if not w.isascii()] or words
            elif mode == 1:  # one English word "translated"
                idx = [i for i, w in enumerate(words) if w.isascii()]
                if idx:
                    words[int(rng.choice(idx))] = str(rng.choice(ZH_CHARS))
        elif rng.random() < 0.3 and len(words) > 2:
            words = words[:-1]
        anon.append((u.utt_id, " ".join(words)))
    write_tsv("hyps_anon.tsv", anon)
    phones = [(u.utt_id, _phones(u.transcript, table)) for u in utts]
    write_tsv("phones_ref.tsv", phones)
    write_tsv("phones_hyp.tsv", phones)
    return out
