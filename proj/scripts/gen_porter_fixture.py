#!/usr/bin/env python3
# Copyright 2026 The SEKE Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates tests/data/porter_fixture.tsv from NLTK's original-algorithm Porter stemmer.

Requires: pip install nltk english-words
"""
import random
import sys

from english_words import get_english_words_set
from nltk.stem.porter import PorterStemmer

SUFFIXES = ["s", "es", "ed", "ing", "ly", "ness", "ational", "ations", "izer",
            "fulness", "ousness", "iveness", "alities", "ivities", "bilities",
            "ement", "ments", "ency", "ancies", "ize", "ized", "ically", "eed",
            "ies", "sses", "alism", "ators", "ibles", "ously", "ent", "ions"]


def main(out_path: str) -> None:
    stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
    rng = random.Random(20260415)
    words = sorted(get_english_words_set(["gcide"], lower=True, alpha=True))
    words = [w for w in words if w.isascii() and w.isalpha()]
    base = rng.sample(words, 9000)
    inflected = [w + rng.choice(SUFFIXES) for w in rng.sample(words, 4000)]
    vocab = sorted(set(base + inflected))
    with open(out_path, "w", encoding="ascii") as f:
        for w in vocab:
            f.write(f"{w}\t{stemmer.stem(w)}\n")
    print(f"wrote {len(vocab)} pairs to {out_path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/porter_fixture.tsv")
