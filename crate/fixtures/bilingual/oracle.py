"""Exact character-trigram cosine table for the verbalized fixture entities.

Reads texts.tsv (IRI, verbalization) and writes cosine_oracle.tsv with one
row per (source, target) pair. Counts are exact, no hashing.
"""
import math
import sys
from collections import Counter
from pathlib import Path

HERE = Path(__file__).parent


def grams(text):
    s = " " + " ".join(text.lower().split()) + " "
    return Counter(s[i:i + 3] for i in range(len(s) - 2))


def cosine(a, b):
    num = sum(a[g] * b[g] for g in a.keys() & b.keys())
    return num / math.sqrt(sum(v * v for v in a.values()) * sum(v * v for v in b.values()))


def main():
    rows = [line.split("\t", 1) for line in (HERE / "texts.tsv").read_text("utf-8").splitlines() if line]
    src = [(iri, grams(t)) for iri, t in rows if "/en#" in iri]
    tgt = [(iri, grams(t)) for iri, t in rows if "/de#" in iri]
    out = [f"{s}\t{t}\t{cosine(a, b):.9f}" for s, a in src for t, b in tgt]
    (HERE / "cosine_oracle.tsv").write_text("\n".join(out) + "\n", "utf-8")
    for s, a in src:
        best = max(tgt, key=lambda tb: (cosine(a, tb[1]), [-ord(c) for c in tb[0]]))
        print(s, "->", best[0], file=sys.stderr)


if __name__ == "__main__":
    main()
