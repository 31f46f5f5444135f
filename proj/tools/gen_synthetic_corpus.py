#!/usr/bin/env python3
"""Writes a synthetic SQuAD-format corpus whose queries split between
lexical and embedding-neighbourhood evidence.

Paragraphs come in pairs (a, b). A lexical query quotes a rare token of its
gold paragraph a verbatim and paraphrases words of b with a different suffix,
so BM25 finds a while the character-trigram embedder leans towards b. A dense
query paraphrases words of its gold paragraph b and quotes a token of a, which
reverses the preference.
"""

import argparse
import json
import random

CONSONANTS = "bdfgklmnprstvz"
VOWELS = "aeiou"
COMMON = ["the", "of", "and", "in", "to", "was", "for", "with", "on", "by",
          "from", "at", "as", "its", "this", "that", "into", "over", "after", "near"]
PARAGRAPH_SUFFIX = "ed"
QUERY_SUFFIX = "ing"


def make_stem(rng, used):
    while True:
        stem = "".join(rng.choice(CONSONANTS) + rng.choice(VOWELS) for _ in range(rng.randint(3, 4)))
        stem += rng.choice(CONSONANTS)
        if stem not in used:
            used.add(stem)
            return stem


def paragraph_text(rng, stems, codes):
    words = [s + PARAGRAPH_SUFFIX for s in stems] + codes
    words += rng.sample(COMMON, 8)
    rng.shuffle(words)
    sentences = []
    while words:
        n = min(len(words), rng.randint(6, 9))
        chunk, words = words[:n], words[n:]
        sentences.append(" ".join(chunk).capitalize() + ".")
    return " ".join(sentences)


def build(seed, pairs):
    rng = random.Random(seed)
    used = set()
    paragraphs = []
    queries = []
    for i in range(pairs):
        a_stems = [make_stem(rng, used) for _ in range(8)]
        b_stems = [make_stem(rng, used) for _ in range(8)]
        a_codes = [make_stem(rng, used) + str(rng.randint(100, 999)) for _ in range(2)]
        b_codes = [make_stem(rng, used) + str(rng.randint(100, 999)) for _ in range(2)]
        a_text = paragraph_text(rng, a_stems, a_codes)
        b_text = paragraph_text(rng, b_stems, b_codes)
        paragraphs.append((f"s{i:02d}a", a_text))
        paragraphs.append((f"s{i:02d}b", b_text))

        lexical = [a_codes[0]] + [s + QUERY_SUFFIX for s in rng.sample(b_stems[:4], rng.randint(3, 4))]
        dense = [a_codes[1]] + [s + QUERY_SUFFIX for s in rng.sample(b_stems[4:], rng.randint(3, 4))]
        for words in (lexical, dense):
            rng.shuffle(words)
        queries.append((f"s{i:02d}a", "which " + " ".join(lexical) + "?"))
        queries.append((f"s{i:02d}b", "what " + " ".join(dense) + "?"))

    data = []
    for i in range(pairs):
        ps = []
        for pid, text in paragraphs[2 * i:2 * i + 2]:
            qas = [{"id": "q" + gold, "question": q, "answers": []}
                   for gold, q in queries if gold == pid]
            ps.append({"id": pid, "context": text, "qas": qas})
        data.append({"id": f"s{i:02d}", "title": f"synthetic {i}", "paragraphs": ps})
    return {"version": "synthetic-1", "data": data}


def build_mixed(seed, pairs):
    """Every query draws a random amount of exact and paraphrased evidence
    for both its gold paragraph and the partner, spreading the alpha at which
    gold reaches the top across the grid."""
    rng = random.Random(seed)
    used = set()
    data = []
    for i in range(pairs):
        stems = {s: [make_stem(rng, used) for _ in range(8)] for s in "ab"}
        codes = {s: [make_stem(rng, used) + str(rng.randint(100, 999)) for _ in range(3)] for s in "ab"}
        texts = {s: paragraph_text(rng, stems[s], codes[s]) for s in "ab"}
        ps = []
        for gold, other in (("a", "b"), ("b", "a")):
            words = rng.sample(codes[gold], rng.randint(0, 1))
            words += [w + QUERY_SUFFIX for w in rng.sample(stems[gold], rng.randint(1, 4))]
            words += rng.sample(codes[other], rng.randint(0, 2))
            words += [w + QUERY_SUFFIX for w in rng.sample(stems[other], rng.randint(0, 3))]
            rng.shuffle(words)
            pid = f"m{i:02d}{gold}"
            ps.append({"id": pid, "context": texts[gold],
                       "qas": [{"id": "q" + pid, "question": "which " + " ".join(words) + "?",
                                "answers": []}]})
        data.append({"id": f"m{i:02d}", "title": f"mixed {i}", "paragraphs": ps})
    return {"version": "synthetic-mixed-1", "data": data}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=50)
    parser.add_argument("--pairs", type=int, default=25)
    parser.add_argument("--mode", choices=["split", "mixed"], default="split")
    parser.add_argument("--out", required=True)
    args = parser.parse_args()
    with open(args.out, "w", encoding="utf-8") as f:
        builder = build if args.mode == "split" else build_mixed
        json.dump(builder(args.seed, args.pairs), f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
