import os
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from csanon.cli import main
from csanon.pinyin import PinyinTable


@pytest.fixture(scope="session")
def table():
    return PinyinTable.default()


def invoke(*args):
    result = CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def run_smoke(workdir: Path, seed: int = 0, alpha: float = 0.8) -> Path:
    """Full fixture pipeline with relative paths, run inside `workdir`."""
    workdir.mkdir(parents=True, exist_ok=True)
    cwd = os.getcwd()
    os.chdir(workdir)
    try:
        invoke("fixture", "corpus", "--out", "raw", "--seed", seed)
        invoke("prep", "--manifest", "raw/raw_manifest.jsonl", "--out", "prep", "--particles", "raw/particles.txt",
               "--patterns", "raw/patterns.txt", "--lexicon", "ENG=raw/eng_lexicon.txt", "--seed", seed)
        invoke("anonymize", "--manifest", "prep/manifest.jsonl", "--out", "anon", "--alpha", alpha, "--seed", seed)
        invoke("fixture", "outputs", "--manifest", "anon/manifest.jsonl", "--out", "models", "--seed", seed)
        invoke("eval-privacy", "--manifest", "anon/manifest.jsonl", "--embeddings", "models/embeddings.jsonl",
               "--system", "anon", "--out", "eval")
        for name in ("orig", "anon"):
            invoke("eval-utility", "--manifest", "anon/manifest.jsonl", "--hyps", f"models/hyps_{name}.tsv",
                   "--ref-phones", "models/phones_ref.tsv", "--hyp-phones", "models/phones_hyp.tsv",
                   "--system", name, "--out", "eval")
        invoke("analyze-csp", "--orig-hyps", "models/hyps_orig.tsv", "--anon-hyps", "models/hyps_anon.tsv",
               "--mer", "eval/mer_anon.tsv", "--manifest", "anon/manifest.jsonl",
               "--lexicon", "ENG=raw/eng_lexicon.txt", "--out", "csp")
        invoke("ablate", "--manifest", "anon/manifest.jsonl", "--mer", "eval/mer_anon.tsv",
               "--flags", "raw/ablation_flags.json", "--out", "ablate")
        invoke("report", "--privacy", "eval/privacy_anon.json", "--utility", "eval/utility_orig.json",
               "--utility", "eval/utility_anon.json", "--out", "report")
    finally:
        os.chdir(cwd)
    return workdir


@pytest.fixture(scope="session")
def _smoke_run(tmp_path_factory):
    start = time.perf_counter()
    path = run_smoke(tmp_path_factory.mktemp("smoke"))
    return path, time.perf_counter() - start


@pytest.fixture(scope="session")
def smoke_dir(_smoke_run):
    return _smoke_run[0]


@pytest.fixture(scope="session")
def smoke_seconds(_smoke_run):
    return _smoke_run[1]


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Call with (ok, detail); the outcome lands in the summary either way."""
    results = request.config.stash.setdefault(ACCEPTANCE, [])
    name = request.node.name.removeprefix("test_")
    recorded = []

    def report(ok: bool, detail: str):
        recorded.append(ok)
        results.append((name, bool(ok), detail))
        assert ok, detail

    yield report
    if not recorded:
        results.append((name, False, "raised before reporting"))


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in results:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
