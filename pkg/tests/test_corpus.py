import numpy as np
import pytest

from csanon.audio import AudioBuffer, AudioReadError, concatenate, read_wav, write_wav
from csanon.corpus import (
    CorpusManifest,
    EnrollmentError,
    ManifestError,
    MergeReport,
    Utterance,
    clean_transcript,
    concat_short_utterances,
    corpus_counts,
    load_manifest,
    n_enroll_for,
    partition_language_setting,
    read_list_file,
    save_manifest,
    split_enroll_trial,
)
from csanon.text import CMN, ENG, NEUTRAL, SPA, Token, Transcript


def utt(utt_id, spk="s1", gender="F", split="test", **kw):
    return Utterance(utt_id, spk, gender, split, **kw)


def tone(duration_s, level=0.1, rate=16000):
    t = np.arange(int(round(duration_s * rate))) / rate
    return AudioBuffer(level * np.sqrt(2) * np.sin(2 * np.pi * 200 * t), rate, "pcm16")


# ------------------------------------------------------------------- audio


def test_wav_round_trip_pcm16(tmp_path):
    x = np.round(np.random.default_rng(0).uniform(-0.5, 0.5, 1000) * 32768) / 32768
    write_wav(tmp_path / "a.wav", AudioBuffer(x, 8000, "pcm16"))
    back = read_wav(tmp_path / "a.wav")
    assert back.encoding == "pcm16" and back.sample_rate_hz == 8000
    np.testing.assert_array_equal(back.samples, x)


def test_wav_float32_and_clipping(tmp_path):
    write_wav(tmp_path / "f.wav", AudioBuffer([0.25, 2.0, -3.0], 16000, "float32"))
    back = read_wav(tmp_path / "f.wav")
    assert back.encoding == "float32"
    np.testing.assert_array_equal(back.samples, [0.25, 1.0, -1.0])


def test_read_errors(tmp_path):
    (tmp_path / "bad.wav").write_bytes(b"not a wav")
    with pytest.raises(AudioReadError):
        read_wav(tmp_path / "bad.wav")
    with pytest.raises(AudioReadError):
        read_wav(tmp_path / "missing.wav")


def test_audio_buffer_validation():
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros((2, 2)), 16000)
    with pytest.raises(ValueError):
        AudioBuffer([], 16000)
    with pytest.raises(ValueError):
        AudioBuffer([np.nan], 16000)
    assert AudioBuffer(np.zeros(10), 16000).rms_db() == -120.0
    assert tone(1.0, level=0.1).rms_db() == pytest.approx(-20.0, abs=0.01)


def test_concatenate_inserts_gap():
    out = concatenate([AudioBuffer(np.ones(10), 100), AudioBuffer(np.ones(5), 100)], gap_s=0.1)
    assert out.samples.size == 25
    np.testing.assert_array_equal(out.samples[10:20], 0.0)


# ---------------------------------------------------------------- manifest


def test_manifest_round_trip(tmp_path):
    m = CorpusManifest([utt("a", annotations={"x", "b"}, transcript="我 like"), utt("b", spk="s2", gender="M")])
    save_manifest(m, tmp_path / "m.jsonl")
    text = (tmp_path / "m.jsonl").read_text(encoding="utf-8")
    assert "我" in text and '["b", "x"]' in text
    back = load_manifest(tmp_path / "m.jsonl")
    assert back.utterances == m.utterances
    assert back.name == "m"


def test_manifest_errors_name_the_line(tmp_path):
    p = tmp_path / "m.jsonl"
    p.write_text('{"utt_id": "a", "speaker_id": "s", "gender": "F", "split": "test"}\n\n'
                 '{"utt_id": "a", "speaker_id": "s", "gender": "F", "split": "test"}\n')
    with pytest.raises(ManifestError, match=r"m.jsonl:3: .*line 1"):
        load_manifest(p)
    p.write_text('{"utt_id": "a", "speaker_id": "s", "gender": "X", "split": "test"}\n')
    with pytest.raises(ManifestError, match=":1:"):
        load_manifest(p)


def test_utterance_validation():
    with pytest.raises(ValueError):
        utt("a", split="train", subset="enroll")
    with pytest.raises(ValueError):
        utt("a", duration_s=-1)
    with pytest.raises(ManifestError):
        CorpusManifest([utt("a"), utt("a")])


def test_read_list_file(tmp_path):
    p = tmp_path / "l.txt"
    p.write_text("# header\n oh \n\nlah\n")
    assert read_list_file(p) == ["oh", "lah"]


# --------------------------------------------------------------- cleaning


def test_clean_transcript():
    patterns = [r"\[[^\]]*\]", r"<[^>]*>"]
    assert clean_transcript("Oh [laugh] we <noise> go lah", ["oh", "lah"], patterns) == "we go"
    assert clean_transcript("   ", ["oh"]) == ""
    # particles only match whole words
    assert clean_transcript("ohio", ["oh"]) == "ohio"


def test_partition_language_setting():
    def tr(*tags):
        return Transcript([Token("x" if t != CMN else "我", t) for t in tags])

    assert partition_language_setting(tr(ENG, ENG)) == "EN"
    assert partition_language_setting(tr(CMN, NEUTRAL)) == "ZH"
    assert partition_language_setting(tr(SPA)) == "ES"
    assert partition_language_setting(tr(CMN, ENG)) == "CS"
    assert partition_language_setting(tr(NEUTRAL), matrix="ZH") == "ZH"
    with pytest.raises(ValueError):
        partition_language_setting(tr(), matrix="CS")


# ----------------------------------------------------------------- merging


def items(*specs):
    out = []
    for i, (dur, level) in enumerate(specs):
        a = tone(dur, level)
        out.append((utt(f"u{i}", duration_s=a.duration_s, transcript=f"w{i}", annotations={f"f{i}"}), a))
    return out


def test_merge_shortest_first_until_long_enough():
    report = MergeReport()
    out = concat_short_utterances(items((1.0, 0.1), (0.5, 0.1), (0.7, 0.1), (3.0, 0.1)), report=report)
    ids = sorted(u.utt_id for u, _ in out)
    # 0.5 + 0.1 gap + 0.7 + 0.1 + 1.0 = 2.4 s
    assert ids == ["u1+u2+u0", "u3"]
    merged = next(u for u, _ in out if "+" in u.utt_id)
    assert merged.duration_s == pytest.approx(2.4)
    assert merged.transcript == "w1 w2 w0"
    assert merged.annotations == {"f0", "f1", "f2"}
    assert report.merged == [["u1", "u2", "u0"]] and report.dropped == []


def test_merge_respects_loudness_tolerance():
    report = MergeReport()
    # the quiet utterance is 20 dB down and cannot join the others
    out = concat_short_utterances(items((1.0, 0.1), (1.1, 0.1), (1.5, 0.01)), report=report)
    assert [u.utt_id for u, _ in out] == ["u0+u1"]
    assert report.dropped == ["u2"]


def test_merge_drops_unfinished_group():
    report = MergeReport()
    assert concat_short_utterances(items((0.5, 0.1), (0.6, 0.1)), report=report) == []
    assert report.dropped == ["u0", "u1"]


def test_merge_records_read_failures():
    def broken():
        raise OSError("unreadable")

    report = MergeReport()
    out = concat_short_utterances([(utt("x", duration_s=1.0), broken)], report=report)
    assert out == [] and "x" in report.failed


def test_merged_audio_length_is_exact():
    out = concat_short_utterances(items((1.0, 0.1), (1.2, 0.1)), gap_s=0.1)
    u, audio = out[0]
    assert audio.samples.size == 16000 + 1600 + 19200
    assert u.duration_s == audio.duration_s


# ------------------------------------------------------------ enroll/trial


def test_n_enroll_for():
    assert [n_enroll_for(c) for c in (5, 16, 20, 39, 40, 100)] == [4, 4, 5, 9, 10, 10]


def corpus(n_per=12):
    utts = []
    for spk, g in (("a", "F"), ("b", "M")):
        for setting in ("EN", "CS"):
            utts += [utt(f"{spk}_{setting}_{i:02d}", spk=spk, gender=g, lang_setting=setting) for i in range(n_per)]
    utts.append(utt("tr1", spk="c", split="train", lang_setting="EN"))
    return CorpusManifest(utts, "toy")


def test_split_enroll_trial_counts_and_determinism():
    m = split_enroll_trial(corpus(20), seed=7)
    for spk in ("a", "b"):
        for setting in ("EN", "CS"):
            us = m.select(speaker_id=spk, lang_setting=setting)
            assert sum(u.subset == "enroll" for u in us) == 5
            assert sum(u.subset == "trial" for u in us) == 15
    assert m.by_id()["tr1"].subset == "unassigned"
    again = split_enroll_trial(corpus(20), seed=7)
    assert [u.subset for u in again] == [u.subset for u in m]
    # input order does not matter
    shuffled = CorpusManifest(list(reversed(corpus(20).utterances)), "toy")
    assert split_enroll_trial(shuffled, seed=7).by_id() == m.by_id()
    other = split_enroll_trial(corpus(20), seed=8)
    assert [u.subset for u in other] != [u.subset for u in m]


def test_split_enroll_trial_needs_a_trial():
    with pytest.raises(EnrollmentError, match="needs at least 5"):
        split_enroll_trial(corpus(4))


def test_corpus_counts():
    counts = corpus_counts(split_enroll_trial(corpus(12)), settings=("EN", "CS"))
    assert counts["test/F"] == {"n_speakers": 1, "EN": {"enroll": 4, "trial": 8}, "CS": {"enroll": 4, "trial": 8}}
    assert counts["train/F"] == {"n_speakers": 1, "EN": {"all": 1}, "CS": {"all": 0}}
