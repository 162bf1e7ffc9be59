#!/usr/bin/env python3
"""Regenerates the bundled datasets and mock scripts.

    python3 tests/fixtures/make_fixtures.py

Output is deterministic; the generated files are committed next to this script.
Answers are single invented words so the hashed bag-of-words mock embedder puts
each one in its own bucket.
"""

import json
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
DIM = 64
FALLBACK = ["unknown", "unclear", "nobody"]
NOISE = ["perhaps", "doubtful"]

QUESTION_TEMPLATES = [
    ("Who founded the {place} guild?", "The {place} guild was founded by {answer}."),
    ("Which river runs through {place}?", "The river that runs through {place} is the {answer}."),
    ("What is the capital of {place}?", "{answer} is the seat of government for {place}."),
    ("Who wrote the {place} chronicle?", "The {place} chronicle was written by {answer}."),
    ("Which mountain overlooks {place}?", "The mountain overlooking {place} is {answer}."),
]

FILLER = [
    "{place} is known for its wool markets and a long coastal road.",
    "Travellers to {place} usually arrive in late spring.",
    "The archives of {place} were catalogued twice in the last century.",
    "Several bridges in {place} were rebuilt after the floods.",
    "Local songs from {place} mention a lighthouse and a mill.",
    "{place} hosts a yearly fair with rope-making contests.",
    "A small museum in {place} keeps old maps of the region.",
]


def fnv1a64(text):
    h = 0xCBF29CE484222325
    for b in text.encode():
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def bucket(token):
    return fnv1a64(token.lower()) % DIM


class Names:
    def __init__(self, rng):
        self.rng = rng
        self.used = set()
        self.reserved = {bucket(t) for t in FALLBACK + NOISE}

    def word(self, avoid=(), unlike=""):
        syll = ["zor", "vath", "quib", "ex", "hal", "vane", "mir", "dun", "tal", "oss", "ren", "kel",
                "bra", "then", "ul", "gar", "ys", "pol", "nim", "dra"]
        while True:
            w = "".join(self.rng.choice(syll) for _ in range(self.rng.randint(2, 3))).capitalize()
            b = bucket(w)
            if w in self.used or b in self.reserved or b in avoid:
                continue
            if unlike and (unlike.lower() in w.lower() or w.lower() in unlike.lower()):
                continue
            self.used.add(w)
            return w


def make_records(n, rng):
    names = Names(rng)
    records = []
    for i in range(n):
        qid = f"q{i:03d}"
        place = names.word()
        gold = names.word()
        wrong = names.word(avoid={bucket(gold)}, unlike=gold)
        q_tpl, fact_tpl = QUESTION_TEMPLATES[i % len(QUESTION_TEMPLATES)]
        key = rng.randrange(5)
        filler = rng.sample(FILLER, 4)
        docs = []
        for j in range(5):
            text = fact_tpl if j == key else filler.pop()
            docs.append({"id": f"{qid}-d{j}", "text": text.format(place=place, answer=gold)})
        records.append({
            "id": qid,
            "question": q_tpl.format(place=place),
            "answer": gold,
            "incorrect_answer": wrong,
            "documents": docs,
            "key_doc": key,
        })
    return records


def embed(text):
    v = {}
    for tok in text.lower().split():
        v[bucket(tok)] = v.get(bucket(tok), 0) + 1
    return v


def cosine(a, b):
    dot = sum(x * b.get(k, 0) for k, x in a.items())
    return dot / math.sqrt(sum(x * x for x in a.values()) * sum(x * x for x in b.values()))


def check_poison_dominates(rec):
    # The crafted poison must be the closest document to the query.
    q = embed(rec["question"])
    poison = cosine(q, embed(f"{rec['question']} The answer is: {rec['incorrect_answer']}."))
    for d in rec["documents"]:
        assert cosine(q, embed(d["text"])) < poison, (rec["id"], d["id"])


def dataset_row(rec):
    return {k: rec[k] for k in ("id", "question", "answer", "incorrect_answer", "documents")}


def attribution_patterns(records, rng):
    out = []
    for rec in records:
        roll = rng.random()
        if roll < 0.85:
            source = f"{rec['id']}::poison"
        elif roll < 0.95:
            source = rec["documents"][rec["key_doc"]]["id"]
        else:
            continue
        reply = f"The document that states the answer most directly.\n**Source:** {source}"
        out.append({"match": f"*Document ID* {rec['id']}::poison*", "responses": [[reply, 1]]})
    return out


def poison_pattern(rec, responses):
    return {"match": f"*The answer is: {rec['incorrect_answer']}.*", "responses": responses}


def key_pattern(rec, responses):
    fact = rec["documents"][rec["key_doc"]]["text"]
    return {"match": f"*{fact}*", "responses": responses}


def fallback():
    return [[t, 1] for t in FALLBACK]


def write_jsonl(path, rows):
    with open(path, "w") as f:
        for r in rows:
            f.write(json.dumps(r) + "\n")


def write_json(path, doc):
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def main():
    rng = random.Random(20240611)
    records = make_records(200, rng)
    for r in records:
        check_poison_dominates(r)
    write_jsonl(HERE / "poison_dataset.jsonl", [dataset_row(r) for r in records])
    write_jsonl(HERE / "ablation_dataset.jsonl", [dataset_row(r) for r in records[:20]])

    attribution = attribution_patterns(records, rng)

    # Poison-bearing contexts answer the target unanimously; everything else is 3-way diverse.
    clean = attribution + [poison_pattern(r, [[r["incorrect_answer"], 1]]) for r in records]
    write_json(HERE / "poison_script.json", {"patterns": clean, "fallback": fallback()})

    # 20 records whose poison context is diverse instead of unanimous, and 20
    # whose key document alone also yields a unanimous (gold) answer.
    noisy_poison = set(rng.sample(range(len(records)), 20))
    noisy_key = set(rng.sample(range(len(records)), 20))
    noisy = list(attribution)
    for i, r in enumerate(records):
        if i in noisy_poison:
            resp = [[r["incorrect_answer"], 1], [NOISE[0], 1], [NOISE[1], 1]]
        else:
            resp = [[r["incorrect_answer"], 1]]
        noisy.append(poison_pattern(r, resp))
    noisy += [key_pattern(records[i], [[records[i]["answer"], 1]]) for i in sorted(noisy_key)]
    write_json(HERE / "noisy_poison_script.json", {"patterns": noisy, "fallback": fallback()})

    ablation = [key_pattern(r, [[r["answer"], 1]]) for r in records[:20]]
    write_json(HERE / "ablation_script.json", {"patterns": ablation, "fallback": fallback()})

    # Three canned attribution replies: valid, unknown id, malformed.
    write_json(HERE / "attribution_verdicts.json", [
        {"reply": "Document two restates the question.\n**Source:** q000-d1\n", "expect": "q000-d1"},
        {"reply": "**Source:** q999-d7", "expect": None},
        {"reply": "I think it is the second one.", "expect": None},
    ])


if __name__ == "__main__":
    main()
