#!/usr/bin/env python3
"""Builds a corpus on which fixed-alpha grid search must return 0.3.

Candidate queries are generated over a mixed synthetic paragraph set, then
scored by the real engine (`hybridsearch eval`) to learn, per query, the set
of grid alphas that rank its gold paragraph first. Queries are then chosen so
that 0.3 lies in strictly more winning sets than any other alpha. Rankings of
one query never depend on the other queries, so the selection stays valid in
the final corpus; rerun `hybridsearch grid-search` on the output to confirm.

Usage: make_grid_fixture.py --binary build/tools/hybridsearch --out-dir DIR
"""

import argparse
import json
import os
import random
import subprocess
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import gen_synthetic_corpus as gen  # noqa: E402

# (first winning alpha, last winning alpha) -> queries to keep. None is a
# query that no alpha ranks first.
QUOTA = {
    ("0.0", "0.3"): 4,
    ("0.3", "1.0"): 4,
    ("0.0", "1.0"): 6,
    ("0.0", "0.5"): 3,
    ("0.6", "1.0"): 3,
    None: 4,
}


def paraphrase(word):
    return word[:-2] + gen.QUERY_SUFFIX if word.endswith(gen.PARAGRAPH_SUFFIX) else word


def add_candidates(source, per_paragraph, seed):
    rng = random.Random(seed)
    paragraphs = [p for a in source["data"] for p in a["paragraphs"]]

    def content(p):
        return [w for w in p["context"].lower().replace(".", "").split() if w not in gen.COMMON]

    n = 0
    for p in paragraphs:
        p["qas"] = []
    for p in paragraphs:
        for j in range(per_paragraph):
            o = rng.choice([x for x in paragraphs if x is not p])
            g_codes = [w for w in content(p) if w[-1].isdigit()]
            g_words = [w for w in content(p) if not w[-1].isdigit()]
            o_codes = [w for w in content(o) if w[-1].isdigit()]
            o_words = [w for w in content(o) if not w[-1].isdigit()]
            if j % 2 == 0:
                # Paraphrased gold with partial exact support; exact-heavy distractor.
                q = rng.sample(g_codes, 1) + [paraphrase(w) for w in rng.sample(g_words, rng.randint(2, 5))]
                q += rng.sample(o_codes, rng.randint(1, 3)) + rng.sample(o_words, rng.randint(0, 2))
            else:
                # Exact gold; distractor with paraphrase and partial exact support.
                q = rng.sample(g_codes, rng.randint(1, 3)) + rng.sample(g_words, rng.randint(0, 2))
                q += rng.sample(o_codes, 1) + [paraphrase(w) for w in rng.sample(o_words, rng.randint(2, 5))]
            q += rng.sample(gen.COMMON, rng.randint(0, 2))
            rng.shuffle(q)
            p["qas"].append({"id": f"c{n:05d}", "question": "which " + " ".join(q) + "?",
                             "answers": []})
            n += 1


def run(binary, config, *args):
    subprocess.run([binary, "--config", config, *args], check=True, capture_output=True)


def config_doc(max_questions):
    return {
        "source_path": "source.json",
        "corpus_path": "corpus.jsonl",
        "index_dir": "index",
        "out_dir": "out",
        "embedding": {"kind": "deterministic_test", "model_id": "hashed-ngram-v1", "dim": 256},
        "judge": {"kind": "fixed"},
        "pool_n": 40,
        "k": 20,
        "max_questions": max_questions,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--binary", required=True)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()
    binary = os.path.abspath(args.binary)

    source = gen.build_mixed(args.seed, 8)
    add_candidates(source, 150, 3)
    with tempfile.TemporaryDirectory() as work:
        with open(os.path.join(work, "source.json"), "w") as f:
            json.dump(source, f)
        cfg = os.path.join(work, "config.json")
        with open(cfg, "w") as f:
            json.dump(config_doc(1_000_000), f)
        run(binary, cfg, "ingest")
        run(binary, cfg, "index")
        run(binary, cfg, "eval", "--method", "fixed")
        with open(os.path.join(work, "out", "fixed_0.6.json")) as f:
            report = json.load(f)

    windows = {}
    for r in report["records"]:
        won = [a for a, rank in r["gold_rank_by_alpha"].items() if rank == 1]
        windows[r["query_id"]] = (won[0], won[-1]) if won else None
    # Contiguous windows only; fused rank crossovers happen at most once per pair,
    # but a third paragraph can split a window.
    remaining = dict(QUOTA)
    keep = set()
    for qid in sorted(windows):
        w = windows[qid]
        if remaining.get(w, 0) > 0:
            won = [a for a, rank in next(r for r in report["records"] if r["query_id"] == qid)
                   ["gold_rank_by_alpha"].items() if rank == 1]
            if w and len(won) != round(float(w[1]) * 10) - round(float(w[0]) * 10) + 1:
                continue
            remaining[w] -= 1
            keep.add(qid)
    if any(remaining.values()):
        sys.exit(f"not enough candidate queries: {remaining}")

    for a in source["data"]:
        for p in a["paragraphs"]:
            p["qas"] = [q for q in p["qas"] if q["id"] in keep]
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "source.json"), "w") as f:
        json.dump(source, f, indent=1)
        f.write("\n")
    with open(os.path.join(args.out_dir, "config.json"), "w") as f:
        json.dump(config_doc(3000), f, indent=1)
        f.write("\n")
    print(f"kept {len(keep)} queries")


if __name__ == "__main__":
    main()
