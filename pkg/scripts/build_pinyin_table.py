"""Regenerate src/csanon/data/pinyin.tsv from a pypinyin ``pinyin_dict.json``.

pypinyin's single-character dictionary is compiled from the Unihan
kHanyuPinyin/kMandarin/kXHC1983 readings (via the pinyin-data project).
Readings are kept in pypinyin's order, which puts the most common reading
first.

    python scripts/build_pinyin_table.py path/to/pinyin_dict.json
"""
import json
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "csanon" / "data" / "pinyin.tsv"


def main(src):
    with open(src, encoding="utf-8") as f:
        table = json.load(f)
    with open(OUT, "w", encoding="utf-8", newline="\n") as out:
        out.write("# codepoint\treadings (comma separated, most common first)\n")
        out.write("# derived from Unihan readings via pinyin-data / pypinyin (MIT)\n")
        for cp in sorted(table, key=int):
            out.write(f"{int(cp):X}\t{table[cp]}\n")


if __name__ == "__main__":
    main(sys.argv[1])
