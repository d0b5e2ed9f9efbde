"""Plain-text tables for the command line outputs."""
from __future__ import annotations

SETTING_ORDER = ("EN", "ZH", "ES", "CS")


def _pct(x) -> str:
    return "-" if x is None else f"{100 * x:.2f}"


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    line = lambda r: "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
    sep = "-" * len(line(header))
    return "\n".join([line(header), sep, *map(line, rows)]) + "\n"


def format_corpus_counts(name: str, counts: dict, settings) -> str:
    """Speakers and utterances per split/gender, enroll/trial per setting."""
    header = ["split/gender", "#spk"]
    for s in settings:
        header += [f"{s} enroll", f"{s} trial"]
    rows = []
    for key, row in counts.items():
        cells = [key, str(row["n_speakers"])]
        for s in settings:
            cell = row.get(s, {})
            if "all" in cell:
                cells += [str(cell["all"]), ""]
            else:
                cells += [str(cell.get("enroll", 0)), str(cell.get("trial", 0))]
        rows.append(cells)
    return f"{name}\n" + _table(header, rows)


def format_privacy(summary: dict) -> str:
    header = ["setting", "EER F", "EER M", "EER avg"]
    rows = []
    for s in [*SETTING_ORDER, "all"]:
        row = summary["all_settings"] if s == "all" else summary["settings"].get(s)
        if not row:
            continue
        rows.append([s, _pct(row.get("F", {}).get("eer")), _pct(row.get("M", {}).get("eer")), _pct(row.get("avg"))])
    text = f"privacy ({summary['system']}, EER %)\n" + _table(header, rows)
    return text + "".join(f"note: {n}\n" for n in summary["notes"])


def format_utility(summary: dict) -> str:
    header = ["setting", "MER", "PER", "#utt"]
    rows = []
    for s in sorted(summary["settings"], key=lambda s: (SETTING_ORDER + (s,)).index(s)):
        row = summary["settings"][s]
        n = max(v["n_utterances"] for v in row.values())
        rows.append([s, _pct(row.get("MER", {}).get("rate")), _pct(row.get("PER", {}).get("rate")), str(n)])
    text = f"utility ({summary['system']}, pooled %, {summary['pinyin']} Pinyin)\n" + _table(header, rows)
    return text + "".join(f"note: {n}\n" for n in summary["notes"])


def format_csp_table(result: dict) -> str:
    """Counts, mean switch points and pooled MER per category.

    A ``*`` marks categories whose MER differs from the total at p < 0.025.
    """
    from .stats import ALPHA

    n = result["n_total"]
    header = ["category", "#utt", "share", "MER %", "p"]
    rows = [["total", str(n), "100.0%", _pct(result["mer_total"]), ""]]
    for cat in ("reduced", "zero", "equal"):
        count = result[f"n_{cat}"]
        p = result["p_values"].get(cat)
        star = "*" if p is not None and p < ALPHA else ""
        rows.append([cat, str(count), f"{100 * count / n:.1f}%", _pct(result[f"mer_{cat}"]) + star,
                     "-" if p is None else f"{p:.3g}"])
    text = _table(header, rows)
    text += f"mean CSP: original {result['mean_csp_orig']:.2f}, anonymized {result['mean_csp_anon']:.2f}\n"
    text += (f"excluded (no switch in original): {result['n_excluded_zero_orig']} "
             f"({100 * result['excluded_fraction']:.1f}%); increased: {result['n_increased']}\n")
    return text


def format_ablation(results: dict) -> str:
    header = ["experiment", "setting", "kept", "MER before", "MER after", "change"]
    rows = []
    for name, per_setting in results.items():
        for s, rep in per_setting.items():
            if "error" in rep:
                rows.append([name, s, "-", "-", "-", rep["error"]])
                continue
            rows.append([name, s, f"{100 * rep['size_fraction']:.0f}%", _pct(rep["mer_before"]),
                         _pct(rep["mer_after"]), f"{100 * rep['relative_change']:+.1f}%"])
    return _table(header, rows)


def combine_systems(privacy: list[dict], utility: list[dict]) -> dict:
    """{system: {setting: {"EER": avg, "MER": rate, "PER": rate}}}."""
    table: dict = {}
    for p in privacy:
        for s, row in p["settings"].items():
            table.setdefault(p["system"], {}).setdefault(s, {})["EER"] = row.get("avg")
    for u in utility:
        for s, row in u["settings"].items():
            cell = table.setdefault(u["system"], {}).setdefault(s, {})
            for kind in ("MER", "PER"):
                if kind in row:
                    cell[kind] = row[kind]["rate"]
    return table


def format_systems(table: dict) -> str:
    settings = [s for s in SETTING_ORDER if any(s in t for t in table.values())]
    header = ["system"] + [f"{s} {m}" for s in settings for m in ("EER", "MER", "PER")]
    rows = []
    for system in sorted(table):
        rows.append([system] + [_pct(table[system].get(s, {}).get(m)) for s in settings for m in ("EER", "MER", "PER")])
    return _table(header, rows)
