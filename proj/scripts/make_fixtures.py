#!/usr/bin/env python3
"""Regenerate the deterministic test fixtures under tests/fixtures/."""

import json
import random
import re
import zlib
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "tests" / "fixtures"

POOLS = {
    "cooperative": "we can solve the puzzle together let us try the next piece first then check the corner "
    "edges colors pattern share idea plan step agree good great".split(),
    "competitive": "i will win this deal your offer is too low my price stays firm you must give more "
    "concede counter bid lose gain trade never better".split(),
    "neutral": "the weather today feels calm maybe a walk in the park or a book about travel music "
    "coffee weekend movie friends stories interesting".split(),
}
OPENERS = ["", "well ", "i think ", "maybe ", "yes ", "but i ", "of course "]
PAIRS = [("alpha-7b", "beta-8b"), ("gamma-2b", "gamma-2b")]


def utterance(rng, condition, agent):
    pool = POOLS[condition]
    words = [rng.choice(pool) for _ in range(rng.randint(6, 14))]
    if agent == "B" and rng.random() < 0.3:
        words = words[:4] + words[:4]
    return (rng.choice(OPENERS) + " ".join(words)).strip().capitalize() + rng.choice([".", "!", "?"])


def dialog(rng, model_a, model_b, condition, k, turns):
    return {
        "id": f"{model_a}__{model_b}__{condition}__{k}",
        "condition": condition,
        "agent_a": model_a,
        "agent_b": model_b,
        "turns": [
            {"agent": "AB"[t % 2], "text": utterance(rng, condition, "AB"[t % 2])} for t in range(turns)
        ],
    }


def embed(text, dim=12):
    v = [0.05] * dim
    for token in re.findall(r"\w+", text.lower()):
        h = zlib.crc32(token.encode())
        v[h % dim] += 1.0 if (h >> 8) & 1 else -1.0
    return [round(x, 6) for x in v]


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240611)
    dialogs = [
        dialog(rng, a, b, c, k, 10)
        for a, b in PAIRS
        for c in ("cooperative", "competitive", "neutral")
        for k in range(2)
    ]
    write_jsonl(OUT / "corpus12.jsonl", dialogs)
    write_jsonl(
        OUT / "corpus12.embeddings.jsonl",
        [
            {"dialog_id": d["id"], "turn_index": t, "vector": embed(turn["text"])}
            for d in dialogs
            for t, turn in enumerate(d["turns"])
        ],
    )
    rng = random.Random(7)
    write_jsonl(OUT / "dialogs_30x10.jsonl", [dialog(rng, "m1", "m2", "neutral", k, 10) for k in range(30)])


if __name__ == "__main__":
    main()
