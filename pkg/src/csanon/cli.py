"""Command line front end.

    csanon prep         raw manifest -> prepared manifest + audio
    csanon anonymize    McAdams anonymization of a prepared corpus
    csanon eval-privacy EER from ingested speaker embeddings
    csanon eval-utility MER/PER from ingested ASR hypotheses and phone strings
    csanon analyze-csp  code-switching points before/after anonymization
    csanon ablate       MER after removing annotated phenomena
    csanon report       combine evaluation outputs into one table

Every command writes ``resolved_config.json`` next to its outputs. Per
command defaults can be supplied with ``csanon --config file.json``, a JSON
object keyed by command name.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import __version__, report
from .asv import build_trials, compute_eer, enrollment_sets, load_embeddings, score_trials, write_scores
from .audio import AudioReadError, read_wav, write_wav
from .corpus import (
    CorpusManifest,
    EnrollmentError,
    MergeReport,
    Utterance,
    clean_transcript,
    concat_short_utterances,
    load_manifest,
    partition_language_setting,
    read_list_file,
    save_manifest,
    split_enroll_trial,
    corpus_counts,
)
from .csp import LanguageLexicon, csp_compare, subset_ablation, tag_tokens
from .mcadams import McAdamsConfig, mcadams_anonymize
from .metrics import AlignmentCounts, EmptyReferenceError, align, corpus_rate, mer_units
from .pinyin import PinyinTable
from .synthetic import make_mini_corpus, make_model_outputs
from .text import ENG, OTHER, SPA, parse_tagged, tokenize_mixed

log = logging.getLogger("csanon")

EXIT_SKIPPED = 3


# ------------------------------------------------------------------ helpers


def _dump_json(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def _write_text(text: str, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _resolved_config(ctx: click.Context, out: Path) -> None:
    params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(ctx.params.items())}
    _dump_json({"command": ctx.info_name, "version": __version__, "params": params}, out / "resolved_config.json")


def _read_tsv(path) -> dict[str, str]:
    """utt_id<TAB>text files; a missing text column means an empty text."""
    out = {}
    with open(path, encoding="utf-8", newline="") as f:
        for n, row in enumerate(csv.reader(f, delimiter="\t", quoting=csv.QUOTE_NONE), 1):
            if not row or not row[0].strip():
                continue
            utt_id = row[0].strip()
            if utt_id in out:
                raise click.ClickException(f"{path}:{n}: duplicate utt_id {utt_id!r}")
            out[utt_id] = row[1] if len(row) > 1 else ""
    return out


def _read_counts(path) -> dict[str, AlignmentCounts]:
    out = {}
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f, delimiter="\t")
        for row in reader:
            out[row["utt_id"]] = AlignmentCounts(int(row["S"]), int(row["D"]), int(row["I"]), int(row["N"]))
    return out


def _write_counts(counts: dict[str, AlignmentCounts], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        w.writerow(["utt_id", "S", "D", "I", "N", "rate"])
        for utt_id in sorted(counts):
            c = counts[utt_id]
            w.writerow([utt_id, c.substitutions, c.deletions, c.insertions, c.ref_len, f"{c.rate:.6f}"])


def _lexicons(specs) -> list[LanguageLexicon]:
    lexicons = []
    for spec in specs:
        lang, sep, path = spec.partition("=")
        if not sep:
            raise click.BadParameter(f"expected LANG=FILE, got {spec!r}", param_hint="--lexicon")
        lexicons.append(LanguageLexicon.from_file(lang.upper(), path))
    return lexicons


def _audio_file(root: Path, utt: Utterance) -> Path:
    p = Path(utt.audio_path)
    return p if p.is_absolute() else root / p


def _safe_name(utt_id: str) -> str:
    return utt_id.replace(os.sep, "_").replace("/", "_")


def _pmap(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _coverage(kind: str, missing, partial: bool, notes: list) -> None:
    missing = sorted(missing)
    if not missing:
        return
    msg = f"{len(missing)} utterances without {kind}: {', '.join(missing[:20])}" + (" ..." if len(missing) > 20 else "")
    if not partial:
        raise click.ClickException(msg + " (use --partial to evaluate the rest)")
    notes.append(msg)
    log.warning(msg)


# --------------------------------------------------------------------- group


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              help="JSON file of per-command option defaults.")
@click.option("-v", "--verbose", count=True)
@click.pass_context
def main(ctx, config_file, verbose):
    logging.basicConfig(level=logging.WARNING - 10 * verbose, format="%(levelname)s %(name)s: %(message)s")
    if config_file:
        with open(config_file, encoding="utf-8") as f:
            ctx.default_map = json.load(f)


manifest_opt = click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
out_opt = click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
seed_opt = click.option("--seed", default=0, show_default=True, type=int)
jobs_opt = click.option("--jobs", default=1, show_default=True, type=int)
audio_root_opt = click.option("--audio-root", type=click.Path(file_okay=False),
                              help="Root for relative audio paths [default: manifest directory].")


# ---------------------------------------------------------------------- prep


def _prep_group(args):
    """Read and merge the utterances of one (split, speaker, setting) group."""
    utts, root, min_d, tol, gap = args
    report_ = MergeReport()
    items = []
    for u in utts:
        try:
            audio = read_wav(_audio_file(Path(root), u))
        except AudioReadError as e:
            report_.failed[u.utt_id] = str(e)
            continue
        u.duration_s = audio.duration_s
        items.append((u, audio))
    merged = concat_short_utterances(items, min_d, tol, gap, report_)
    return merged, report_


@main.command()
@manifest_opt
@audio_root_opt
@out_opt
@click.option("--particles", type=click.Path(exists=True, dir_okay=False), help="Discourse particle list.")
@click.option("--patterns", type=click.Path(exists=True, dir_okay=False), help="Annotation regex list.")
@click.option("--lexicon", "lexicon_specs", multiple=True, help="LANG=FILE word list (ENG or SPA).")
@click.option("--matrix-setting", default="EN", show_default=True, type=click.Choice(["EN", "ZH", "ES"]),
              help="Setting for transcripts without any language-tagged token.")
@click.option("--matrix-lang", default=ENG, show_default=True, type=click.Choice([ENG, SPA]),
              help="Tag for words found in several lexicons without tagged neighbours.")
@click.option("--unknown-lang", default=OTHER, show_default=True, type=click.Choice([OTHER, ENG, SPA]),
              help="Tag for Latin-script words found in no lexicon.")
@click.option("--min-duration", default=2.0, show_default=True)
@click.option("--max-duration", default=None, type=float, help="Drop longer utterances [default: no limit].")
@click.option("--loudness-tol", default=3.0, show_default=True, help="Max RMS level difference (dB) for merging.")
@click.option("--gap", default=0.1, show_default=True, help="Silence (s) between merged utterances.")
@click.option("--n-enroll", nargs=2, type=int, default=(4, 10), show_default=True)
@seed_opt
@jobs_opt
@click.pass_context
def prep(ctx, manifest, audio_root, out, particles, patterns, lexicon_specs, matrix_setting, matrix_lang,
         unknown_lang, min_duration, max_duration, loudness_tol, gap, n_enroll, seed, jobs):
    """Prepare a corpus: cleanup, language settings, merging, enroll/trial split."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    root = Path(audio_root) if audio_root else Path(manifest).parent
    raw = load_manifest(manifest)
    particle_list = read_list_file(particles) if particles else []
    pattern_list = read_list_file(patterns) if patterns else []
    lexicons = _lexicons(lexicon_specs)

    excluded = {"overlap": [], "empty_transcript": [], "too_long": []}
    kept: list[Utterance] = []
    for u in raw.utterances:
        if "overlap" in u.annotations:
            excluded["overlap"].append(u.utt_id)
            continue
        u.transcript = clean_transcript(u.transcript, particle_list, pattern_list)
        if not tokenize_mixed(u.transcript).tokens:
            excluded["empty_transcript"].append(u.utt_id)
            continue
        if u.lang_setting == "unknown":
            tagged = tag_tokens(tokenize_mixed(u.transcript), lexicons, matrix_lang, unknown_lang)
            u.lang_setting = partition_language_setting(tagged, matrix_setting)
        kept.append(u)

    groups = defaultdict(list)
    for u in kept:
        groups[(u.split, u.speaker_id, u.lang_setting)].append(u)
    tasks = [(groups[k], str(root), min_duration, loudness_tol, gap) for k in sorted(groups)]
    results = _pmap(_prep_group, tasks, jobs)

    merge_info = {"merged": [], "dropped_short": [], "failed": {}}
    prepared: list[Utterance] = []
    for merged, rep in results:
        merge_info["merged"] += rep.merged
        merge_info["dropped_short"] += rep.dropped
        merge_info["failed"].update(rep.failed)
        for utt, audio in merged:
            if max_duration is not None and utt.duration_s > max_duration:
                excluded["too_long"].append(utt.utt_id)
                continue
            rel = f"audio/{_safe_name(utt.utt_id)}.wav"
            write_wav(out / rel, audio)
            utt.audio_path = rel
            utt.subset = "unassigned"
            prepared.append(utt)

    prepared.sort(key=lambda u: u.utt_id)
    try:
        result = split_enroll_trial(CorpusManifest(prepared, raw.name), tuple(n_enroll), seed)
    except EnrollmentError as e:
        raise click.ClickException(str(e)) from e
    save_manifest(result, out / "manifest.jsonl")

    settings = sorted({u.lang_setting for u in result.utterances}, key=["EN", "ZH", "ES", "CS"].index)
    counts = corpus_counts(result, settings)
    summary = {
        "dataset": raw.name,
        "n_input": len(raw),
        "n_output": len(result),
        "excluded": {k: sorted(v) for k, v in excluded.items()},
        "merged": sorted(merge_info["merged"]),
        "dropped_short": sorted(merge_info["dropped_short"]),
        "failed_audio": dict(sorted(merge_info["failed"].items())),
        "counts": counts,
    }
    _dump_json(summary, out / "prep_report.json")
    _write_text(report.format_corpus_counts(raw.name, counts, settings), out / "prep_report.txt")
    _resolved_config(ctx, out)
    click.echo(report.format_corpus_counts(raw.name, counts, settings))
    if merge_info["failed"]:
        click.echo(f"{len(merge_info['failed'])} utterances skipped (unreadable audio)", err=True)
        ctx.exit(EXIT_SKIPPED)


# ----------------------------------------------------------------- anonymize


def _anonymize_one(args):
    utt_id, src, dst, cfg = args
    try:
        audio = read_wav(src)
    except AudioReadError as e:
        return {"utt_id": utt_id, "error": str(e)}
    res = mcadams_anonymize(audio, cfg, utt_id)
    write_wav(dst, res.audio, audio.encoding)
    return {"utt_id": utt_id, "alpha": res.alpha, "n_frames": res.n_frames,
            "n_silent": res.n_silent, "n_failed": res.n_failed}


@main.command()
@manifest_opt
@audio_root_opt
@out_opt
@click.option("--alpha", default=0.8, show_default=True, help="McAdams coefficient.")
@click.option("--randomize-alpha", nargs=2, type=float, default=None,
              help="Draw alpha per utterance uniformly from LO HI.")
@click.option("--frame-ms", default=20.0, show_default=True)
@click.option("--hop-ms", default=10.0, show_default=True)
@click.option("--lpc-order", type=int, default=None, help="[default: 20 at 16 kHz, rate/1000 + 4 otherwise]")
@seed_opt
@jobs_opt
@click.pass_context
def anonymize(ctx, manifest, audio_root, out, alpha, randomize_alpha, frame_ms, hop_ms, lpc_order, seed, jobs):
    """Anonymize every utterance of a manifest with the McAdams method."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    root = Path(audio_root) if audio_root else Path(manifest).parent
    man = load_manifest(manifest)
    cfg = McAdamsConfig(alpha=alpha, frame_ms=frame_ms, hop_ms=hop_ms, lpc_order=lpc_order,
                        randomize_alpha=tuple(randomize_alpha) if randomize_alpha else None, seed=seed)
    tasks = [(u.utt_id, _audio_file(root, u), out / u.audio_path, cfg)
             for u in sorted(man.utterances, key=lambda u: u.utt_id)]
    for _, _, dst, _ in tasks:
        if not dst.resolve().is_relative_to(out.resolve()):
            raise click.ClickException(f"{dst}: absolute audio paths cannot be mirrored under --out")
    entries = _pmap(_anonymize_one, tasks, jobs)
    skipped = [e for e in entries if "error" in e]
    save_manifest(man, out / "manifest.jsonl")
    _dump_json({
        "n_utterances": len(entries),
        "n_skipped": len(skipped),
        "n_frames_failed": sum(e.get("n_failed", 0) for e in entries),
        "utterances": entries,
    }, out / "anonymize_log.json")
    _resolved_config(ctx, out)
    click.echo(f"anonymized {len(entries) - len(skipped)} of {len(entries)} utterances -> {out}")
    if skipped:
        click.echo(f"{len(skipped)} utterances skipped (unreadable audio)", err=True)
        ctx.exit(EXIT_SKIPPED)


# ---------------------------------------------------------------- evaluation


@main.command("eval-privacy")
@manifest_opt
@click.option("--embeddings", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--system", default="orig", show_default=True, help="Name of the evaluated system.")
@out_opt
@click.option("--partial", is_flag=True, help="Evaluate despite missing embeddings.")
@click.option("--write-scores/--no-write-scores", "keep_scores", default=True, show_default=True)
@click.pass_context
def eval_privacy(ctx, manifest, embeddings, system, out, partial, keep_scores):
    """EER per language setting and gender, plus the gender average."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    man = load_manifest(manifest)
    emb = load_embeddings(embeddings)
    notes: list[str] = []
    needed = {u.utt_id for u in man.utterances if u.subset in ("enroll", "trial")}
    _coverage("embeddings", needed - set(emb), partial, notes)
    covered = CorpusManifest([u for u in man.utterances if u.subset == "unassigned" or u.utt_id in emb], man.name)

    settings = [s for s in ("EN", "ZH", "ES", "CS") if any(u.lang_setting == s for u in covered.utterances)]
    results: dict = {}
    pooled: dict[str, list] = defaultdict(list)
    for setting in settings:
        row = {}
        for gender in ("F", "M"):
            try:
                trials = build_trials(covered, setting, gender)
            except ValueError as e:
                notes.append(str(e))
                continue
            rows = score_trials(trials, enrollment_sets(covered, setting, gender), emb)
            if keep_scores:
                (out / "scores").mkdir(parents=True, exist_ok=True)
                write_scores(rows, out / "scores" / f"{system}_{setting}_{gender}.tsv")
            row[gender] = _eer_dict(compute_eer([(s, lab) for _, _, s, lab in rows]))
            pooled[gender] += [(s, lab) for _, _, s, lab in rows]
        if row:
            row["avg"] = sum(row[g]["eer"] for g in ("F", "M") if g in row) / sum(g in row for g in ("F", "M"))
            results[setting] = row
    overall = {g: _eer_dict(compute_eer(pooled[g])) for g in ("F", "M") if pooled[g]}
    if overall:
        overall["avg"] = sum(v["eer"] for v in overall.values()) / len(overall)
    summary = {"system": system, "dataset": man.name, "metric": "EER", "settings": results,
               "all_settings": overall, "notes": notes}
    _dump_json(summary, out / f"privacy_{system}.json")
    text = report.format_privacy(summary)
    _write_text(text, out / f"privacy_{system}.txt")
    _resolved_config(ctx, out)
    click.echo(text)


def _eer_dict(res) -> dict:
    d = dict(res.__dict__)
    # JSON has no infinity; a threshold above every score is reported as null
    if not math.isfinite(d["threshold"]):
        d["threshold"] = None
    return d


def _score_units(ref: str, hyp: str, table, tones):
    return align(mer_units(ref, table, tones), mer_units(hyp, table, tones))


@main.command("eval-utility")
@manifest_opt
@click.option("--hyps", type=click.Path(exists=True, dir_okay=False), help="TSV utt_id, ASR hypothesis.")
@click.option("--refs", type=click.Path(exists=True, dir_okay=False),
              help="TSV utt_id, reference [default: manifest transcripts].")
@click.option("--ref-phones", type=click.Path(exists=True, dir_okay=False))
@click.option("--hyp-phones", type=click.Path(exists=True, dir_okay=False))
@click.option("--pinyin-table", type=click.Path(exists=True, dir_okay=False), help="[default: bundled table]")
@click.option("--tones/--no-tones", default=False, show_default=True, help="Score tone-marked Pinyin.")
@click.option("--system", default="orig", show_default=True)
@out_opt
@click.option("--partial", is_flag=True, help="Evaluate despite missing hypotheses.")
@click.pass_context
def eval_utility(ctx, manifest, hyps, refs, ref_phones, hyp_phones, pinyin_table, tones, system, out, partial):
    """Pooled MER and PER per language setting, plus per-utterance counts."""
    if not hyps and not (ref_phones and hyp_phones):
        raise click.UsageError("need --hyps and/or --ref-phones with --hyp-phones")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    man = load_manifest(manifest)
    table = PinyinTable.from_tsv(pinyin_table) if pinyin_table else PinyinTable.default()
    notes: list[str] = []
    setting_of = {u.utt_id: u.lang_setting for u in man.utterances}
    summary = {"system": system, "dataset": man.name, "aggregation": "pooled",
               "pinyin": "tone-marked" if tones else "toneless", "settings": {}, "notes": notes}

    def evaluate(kind, refs_map, hyps_map, scorer):
        _coverage(f"{kind} hypotheses", set(refs_map) - set(hyps_map), partial, notes)
        counts, empty = {}, []
        for utt_id in sorted(set(refs_map) & set(hyps_map)):
            try:
                counts[utt_id] = scorer(refs_map[utt_id], hyps_map[utt_id])
            except EmptyReferenceError:
                empty.append(utt_id)
        if empty:
            notes.append(f"{kind}: {len(empty)} empty references excluded: {', '.join(empty)}")
        by_setting = defaultdict(list)
        for utt_id, c in counts.items():
            by_setting[setting_of.get(utt_id, "unknown")].append(c)
        for setting, cs in by_setting.items():
            rep = corpus_rate(cs, kind)
            summary["settings"].setdefault(setting, {})[kind] = {
                "rate": rep.rate, "S": rep.counts.substitutions, "D": rep.counts.deletions,
                "I": rep.counts.insertions, "N": rep.counts.ref_len, "n_utterances": len(cs),
            }
        return counts

    if hyps:
        refs_map = _read_tsv(refs) if refs else {u.utt_id: u.transcript for u in man.utterances}
        counts = evaluate("MER", refs_map, _read_tsv(hyps), lambda r, h: _score_units(r, h, table, tones))
        _write_counts(counts, out / f"mer_{system}.tsv")
        if table.unmapped:
            notes.append(f"{table.unmapped} Han characters missing from the Pinyin table")
    if ref_phones and hyp_phones:
        counts = evaluate("PER", _read_tsv(ref_phones), _read_tsv(hyp_phones),
                          lambda r, h: align(r.split(), h.split()))
        _write_counts(counts, out / f"per_{system}.tsv")

    _dump_json(summary, out / f"utility_{system}.json")
    text = report.format_utility(summary)
    _write_text(text, out / f"utility_{system}.txt")
    _resolved_config(ctx, out)
    click.echo(text)


# ------------------------------------------------------------------ analysis


@main.command("analyze-csp")
@click.option("--orig-hyps", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--anon-hyps", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mer", "mer_file", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Per-utterance MER counts of the anonymized data (from eval-utility).")
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False),
              help="Restrict to utterances of the CS setting in this manifest.")
@click.option("--lexicon", "lexicon_specs", multiple=True, help="LANG=FILE word list (ENG or SPA).")
@click.option("--matrix-lang", default=ENG, show_default=True, type=click.Choice([ENG, SPA]))
@click.option("--unknown-lang", default=OTHER, show_default=True, type=click.Choice([OTHER, ENG, SPA]))
@click.option("--pretagged", is_flag=True, help="Hypotheses are 'surface/TAG' sequences.")
@out_opt
@click.pass_context
def analyze_csp(ctx, orig_hyps, anon_hyps, mer_file, manifest, lexicon_specs, matrix_lang, unknown_lang,
                pretagged, out):
    """Code-switching points before and after anonymization, by MER category."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    lexicons = _lexicons(lexicon_specs)

    def load(path):
        texts = _read_tsv(path)
        if pretagged:
            return {k: parse_tagged(v, k) for k, v in texts.items()}
        return {k: tag_tokens(tokenize_mixed(v, k), lexicons, matrix_lang, unknown_lang) for k, v in texts.items()}

    orig, anon = load(orig_hyps), load(anon_hyps)
    mer_counts = _read_counts(mer_file)
    if manifest:
        cs_ids = {u.utt_id for u in load_manifest(manifest).utterances if u.lang_setting == "CS"}
        orig = {k: v for k, v in orig.items() if k in cs_ids}
        anon = {k: v for k, v in anon.items() if k in cs_ids}
    try:
        agg = csp_compare(orig, anon, mer_counts)
    except KeyError as e:
        raise click.ClickException(str(e.args[0])) from e
    result = agg.to_dict()
    _dump_json(result, out / "csp.json")
    with open(out / "csp_records.tsv", "w", encoding="utf-8", newline="\n") as f:
        f.write("utt_id\tcsp_orig\tcsp_anon\tmer\n")
        for r in agg.records:
            f.write(f"{r.utt_id}\t{r.csp_orig}\t{r.csp_anon}\t{r.mer:.6f}\n")
    text = report.format_csp_table(result)
    _write_text(text, out / "csp.txt")
    _resolved_config(ctx, out)
    click.echo(text)


@main.command()
@manifest_opt
@click.option("--mer", "mer_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--flags", "flags_file", type=click.Path(exists=True, dir_okay=False),
              help='JSON {"experiment": [flag, ...]} of flag sets to remove.')
@click.option("--flag", "flag_list", multiple=True, help="Single flag set given on the command line.")
@out_opt
@click.pass_context
def ablate(ctx, manifest, mer_file, flags_file, flag_list, out):
    """Pooled MER per setting after removing utterances with annotated phenomena."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    experiments = {}
    if flags_file:
        with open(flags_file, encoding="utf-8") as f:
            experiments.update(json.load(f))
    if flag_list:
        experiments["cli"] = list(flag_list)
    if not experiments:
        raise click.UsageError("give --flags FILE or at least one --flag")
    man = load_manifest(manifest)
    counts = _read_counts(mer_file)
    results = {}
    for name, flags in sorted(experiments.items()):
        per_setting = {}
        for setting in ("EN", "ZH", "ES", "CS"):
            utts = [u for u in man.utterances if u.lang_setting == setting]
            if not any(u.utt_id in counts for u in utts):
                continue
            try:
                per_setting[setting] = subset_ablation(utts, counts, flags).to_dict()
            except ValueError as e:
                per_setting[setting] = {"error": str(e)}
        results[name] = per_setting
    _dump_json(results, out / "ablation.json")
    text = report.format_ablation(results)
    _write_text(text, out / "ablation.txt")
    _resolved_config(ctx, out)
    click.echo(text)


@main.command("report")
@click.option("--privacy", "privacy_files", multiple=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--utility", "utility_files", multiple=True, type=click.Path(exists=True, dir_okay=False))
@out_opt
@click.pass_context
def report_cmd(ctx, privacy_files, utility_files, out):
    """Combine eval-privacy/eval-utility outputs of several systems into one table."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    privacy = [json.loads(Path(p).read_text(encoding="utf-8")) for p in privacy_files]
    utility = [json.loads(Path(p).read_text(encoding="utf-8")) for p in utility_files]
    table = report.combine_systems(privacy, utility)
    _dump_json(table, out / "summary.json")
    text = report.format_systems(table)
    _write_text(text, out / "summary.txt")
    _resolved_config(ctx, out)
    click.echo(text)


# ------------------------------------------------------------------ fixtures


@main.group()
def fixture():
    """Generate the synthetic mini-corpus and stand-in model outputs."""


@fixture.command("corpus")
@out_opt
@seed_opt
@click.option("--n-regular", default=10, show_default=True, help="Regular utterances per speaker and setting.")
def fixture_corpus(out, seed, n_regular):
    path = make_mini_corpus(out, n_regular=n_regular, seed=seed)
    click.echo(f"wrote raw mini-corpus to {path}")


@fixture.command("outputs")
@manifest_opt
@out_opt
@seed_opt
def fixture_outputs(manifest, out, seed):
    path = make_model_outputs(load_manifest(manifest), out, seed=seed)
    click.echo(f"wrote stand-in model outputs to {path}")


if __name__ == "__main__":
    sys.exit(main())
