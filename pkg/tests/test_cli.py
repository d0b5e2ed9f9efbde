import json

import numpy as np
import pytest
from click.testing import CliRunner

from csanon.audio import read_wav, write_wav
from csanon.cli import EXIT_SKIPPED, main
from csanon.corpus import CorpusManifest, Utterance, load_manifest, save_manifest
from csanon.synthetic import SPEAKERS, speech_like
from conftest import invoke


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


@pytest.fixture
def small_corpus(tmp_path):
    """Two speakers, seven EN utterances each, one overlap and two shorts."""
    utts = []
    for spk in ("spk01", "spk03"):
        gender, voice = SPEAKERS[spk]
        for i in range(7):
            dur = 1.0 if i >= 5 else 2.2
            utt_id = f"{spk}_{i}"
            write_wav(tmp_path / "wav" / f"{utt_id}.wav", speech_like(dur, voice=voice, seed=i))
            utts.append(Utterance(utt_id, spk, gender, "test", audio_path=f"wav/{utt_id}.wav",
                                  transcript=f"oh we go home {i} [laugh]"))
        utts.append(Utterance(f"{spk}_ov", spk, gender, "test", audio_path=f"wav/{spk}_0.wav",
                              transcript="we talk", annotations={"overlap"}))
    save_manifest(CorpusManifest(utts), tmp_path / "raw.jsonl")
    (tmp_path / "particles.txt").write_text("oh\n")
    (tmp_path / "patterns.txt").write_text(r"\[[^\]]*\]" + "\n")
    (tmp_path / "eng.txt").write_text("we\ngo\nhome\ntalk\n")
    return tmp_path


def prep_args(root, out):
    return ["prep", "--manifest", root / "raw.jsonl", "--out", out, "--particles", root / "particles.txt",
            "--patterns", root / "patterns.txt", "--lexicon", f"ENG={root / 'eng.txt'}"]


def test_prep(small_corpus):
    out = small_corpus / "prep"
    result = invoke(*prep_args(small_corpus, out))
    assert "test/F" in result.output
    m = load_manifest(out / "manifest.jsonl")
    ids = [u.utt_id for u in m]
    assert ids == sorted(ids)
    assert "spk01_ov" not in ids and "spk01_5+spk01_6" in ids
    assert len(m) == 12
    for u in m:
        assert u.transcript.startswith("we go home") and "[" not in u.transcript
        assert u.lang_setting == "EN"
        assert (out / u.audio_path).exists()
        assert u.duration_s >= 2.0
    assert sum(u.subset == "enroll" for u in m) == 8
    report = json.loads((out / "prep_report.json").read_text())
    assert report["excluded"]["overlap"] == ["spk01_ov", "spk03_ov"]
    assert json.loads((out / "resolved_config.json").read_text())["params"]["min_duration"] == 2.0


def test_prep_is_idempotent(small_corpus):
    first = small_corpus / "p1"
    invoke(*prep_args(small_corpus, first))
    second = small_corpus / "p2"
    invoke("prep", "--manifest", first / "manifest.jsonl", "--out", second)
    a = load_manifest(first / "manifest.jsonl").utterances
    b = load_manifest(second / "manifest.jsonl").utterances
    assert a == b
    for u in a:
        np.testing.assert_array_equal(read_wav(first / u.audio_path).samples, read_wav(second / u.audio_path).samples)


def test_prep_reports_unreadable_audio(small_corpus):
    (small_corpus / "wav" / "spk01_1.wav").write_bytes(b"garbage")
    out = small_corpus / "prep"
    result = run(*prep_args(small_corpus, out))
    assert result.exit_code == EXIT_SKIPPED
    report = json.loads((out / "prep_report.json").read_text())
    assert list(report["failed_audio"]) == ["spk01_1"]


def test_anonymize_identity_and_log(small_corpus):
    prep = small_corpus / "prep"
    invoke(*prep_args(small_corpus, prep))
    anon = small_corpus / "anon"
    invoke("anonymize", "--manifest", prep / "manifest.jsonl", "--out", anon, "--alpha", 1.0)
    log = json.loads((anon / "anonymize_log.json").read_text())
    assert log["n_utterances"] == 12 and log["n_skipped"] == 0
    assert [e["utt_id"] for e in log["utterances"]] == sorted(e["utt_id"] for e in log["utterances"])
    assert (anon / "manifest.jsonl").read_bytes() == (prep / "manifest.jsonl").read_bytes()
    for u in load_manifest(anon / "manifest.jsonl"):
        x, y = read_wav(prep / u.audio_path), read_wav(anon / u.audio_path)
        assert y.encoding == "pcm16"
        # one PCM quantization step at most
        assert np.max(np.abs(x.samples - y.samples)) <= 1 / 32768 + 1e-12


def test_anonymize_randomized_alpha_is_logged(small_corpus):
    prep = small_corpus / "prep"
    invoke(*prep_args(small_corpus, prep))
    anon = small_corpus / "anon"
    invoke("anonymize", "--manifest", prep / "manifest.jsonl", "--out", anon, "--randomize-alpha", 0.7, 0.9)
    alphas = [e["alpha"] for e in json.loads((anon / "anonymize_log.json").read_text())["utterances"]]
    assert all(0.7 <= a <= 0.9 for a in alphas) and len(set(alphas)) > 1


def test_config_file_supplies_defaults(small_corpus):
    prep = small_corpus / "prep"
    invoke(*prep_args(small_corpus, prep))
    cfg = small_corpus / "cfg.json"
    cfg.write_text(json.dumps({"anonymize": {"alpha": 0.9, "seed": 5}}))
    anon = small_corpus / "anon"
    invoke("--config", cfg, "anonymize", "--manifest", prep / "manifest.jsonl", "--out", anon)
    params = json.loads((anon / "resolved_config.json").read_text())["params"]
    assert params["alpha"] == 0.9 and params["seed"] == 5


def test_eval_utility_coverage(small_corpus, tmp_path):
    prep = small_corpus / "prep"
    invoke(*prep_args(small_corpus, prep))
    m = load_manifest(prep / "manifest.jsonl")
    hyps = tmp_path / "hyps.tsv"
    hyps.write_text("".join(f"{u.utt_id}\t{u.transcript}\n" for u in m.utterances[1:]))
    result = run("eval-utility", "--manifest", prep / "manifest.jsonl", "--hyps", hyps, "--out", tmp_path / "e")
    assert result.exit_code != 0 and m.utterances[0].utt_id in result.output
    invoke("eval-utility", "--manifest", prep / "manifest.jsonl", "--hyps", hyps, "--out", tmp_path / "e",
           "--partial")
    summary = json.loads((tmp_path / "e" / "utility_orig.json").read_text())
    assert summary["settings"]["EN"]["MER"]["rate"] == 0.0
    assert summary["notes"]


def test_eval_privacy_requires_embeddings(small_corpus, tmp_path):
    prep = small_corpus / "prep"
    invoke(*prep_args(small_corpus, prep))
    emb = tmp_path / "e.jsonl"
    emb.write_text('{"utt_id": "nobody", "embedding": [1.0, 0.0]}\n')
    result = run("eval-privacy", "--manifest", prep / "manifest.jsonl", "--embeddings", emb, "--out", tmp_path / "o")
    assert result.exit_code != 0 and "--partial" in result.output


def test_analyze_csp_rejects_mismatched_ids(tmp_path):
    (tmp_path / "o.tsv").write_text("a\t我 like\nb\t我 like\n")
    (tmp_path / "a.tsv").write_text("a\t我 like\n")
    (tmp_path / "mer.tsv").write_text("utt_id\tS\tD\tI\tN\trate\na\t0\t0\t0\t2\t0\nb\t0\t0\t0\t2\t0\n")
    (tmp_path / "eng.txt").write_text("like\n")
    result = run("analyze-csp", "--orig-hyps", tmp_path / "o.tsv", "--anon-hyps", tmp_path / "a.tsv",
                 "--mer", tmp_path / "mer.tsv", "--lexicon", f"ENG={tmp_path / 'eng.txt'}", "--out", tmp_path / "c")
    assert result.exit_code != 0 and "b" in result.output


def test_analyze_csp_pretagged(tmp_path):
    (tmp_path / "o.tsv").write_text("a\t我/CMN like/ENG\nb\t我/CMN x/ENG 你/CMN\n")
    (tmp_path / "mer.tsv").write_text("utt_id\tS\tD\tI\tN\trate\na\t0\t0\t0\t2\t0\nb\t1\t0\t0\t3\t0.333\n")
    invoke("analyze-csp", "--orig-hyps", tmp_path / "o.tsv", "--anon-hyps", tmp_path / "o.tsv",
           "--mer", tmp_path / "mer.tsv", "--pretagged", "--out", tmp_path / "c")
    res = json.loads((tmp_path / "c" / "csp.json").read_text())
    assert res["n_total"] == 2 and res["n_equal"] == 2 and res["mean_csp_orig"] == 1.5


def test_smoke_outputs(smoke_dir):
    csp = json.loads((smoke_dir / "csp" / "csp.json").read_text())
    assert csp["n_total"] > 0 and csp["n_reduced"] > 0
    assert "*" in (smoke_dir / "csp" / "csp.txt").read_text()
    abl = json.loads((smoke_dir / "ablate" / "ablation.json").read_text())
    assert set(abl["transcription_phenomena"]) == {"EN", "ZH", "CS"}
    table = json.loads((smoke_dir / "report" / "summary.json").read_text())
    assert set(table) == {"anon", "orig"}
    for sub in ("prep", "anon", "eval", "csp", "ablate", "report"):
        assert (smoke_dir / sub / "resolved_config.json").exists()


def test_parallel_jobs_do_not_change_bytes(small_corpus):
    prep = small_corpus / "prep"
    invoke(*prep_args(small_corpus, prep))
    for jobs in (1, 2):
        invoke("anonymize", "--manifest", prep / "manifest.jsonl", "--out", small_corpus / f"anon{jobs}",
               "--jobs", jobs)
    for u in load_manifest(prep / "manifest.jsonl"):
        assert (small_corpus / "anon1" / u.audio_path).read_bytes() == (small_corpus / "anon2" / u.audio_path).read_bytes()
    logs = [(small_corpus / f"anon{j}" / "anonymize_log.json").read_bytes() for j in (1, 2)]
    assert logs[0] == logs[1]
