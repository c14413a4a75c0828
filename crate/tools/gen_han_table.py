#!/usr/bin/env python3
"""Regenerate tables/zh.tsv from the pinyin-data readings bundled with pypinyin.

Each CJK Unified Ideograph (U+4E00-U+9FFF) and Extension A (U+3400-U+4DBF)
character gets its first listed reading, tone marks removed. `ü` is written `v`.

    pip install pypinyin
    python3 tools/gen_han_table.py > crates/core/tables/zh.tsv
"""
import sys
import unicodedata

from pypinyin.pinyin_dict import pinyin_dict

RANGES = [(0x3400, 0x4DBF), (0x4E00, 0x9FFF)]

# Fullwidth and CJK punctuation that shows up inside Han runs.
PUNCT = [
    ("，", ","), ("。", "."), ("、", ","), ("；", ";"), ("：", ":"),
    ("？", "?"), ("！", "!"), ("（", "("), ("）", ")"), ("《", '"'),
    ("》", '"'), ("「", '"'), ("」", '"'), ("『", '"'), ("』", '"'),
    ("“", '"'), ("”", '"'), ("‘", "'"), ("’", "'"), ("—", "-"),
    ("…", "..."), ("·", " "), ("　", " "),
]


def toneless(reading):
    out = []
    for ch in unicodedata.normalize("NFD", reading):
        if ch == "̈":  # diaeresis: u + ¨ -> v
            out[-1] = "v"
        elif unicodedata.category(ch) == "Mn":
            continue
        else:
            out.append(ch)
    s = "".join(out)
    if s == "ê":
        s = "e"
    s = s.replace("ê", "e")
    assert s.isascii() and s.isalpha(), (reading, s)
    return s


def main():
    w = sys.stdout.write
    w("# Han -> toneless pinyin, one reading per character (first listed).\n")
    w("# Generated by tools/gen_han_table.py from pinyin-data (kMandarin-first order).\n")
    w("!script han\n")
    w("!version pinyin-data-1\n")
    for src, dst in PUNCT:
        w(f"{src}\t{dst}\n")
    for lo, hi in RANGES:
        for cp in range(lo, hi + 1):
            readings = pinyin_dict.get(cp)
            if not readings:
                continue
            w(f"{chr(cp)}\t{toneless(readings.split(',')[0])}\n")


if __name__ == "__main__":
    main()
