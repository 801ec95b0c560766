#!/usr/bin/env python3
"""Regenerate the synthetic fixture corpora under fixtures/.

The texts are synthetic stand-ins with the same schema and group counts as
the datasets the pipeline targets; they carry no real participant data.
Deterministic: rerunning this script reproduces the committed files.
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"

PT_OPENERS = [
    "o menino ia passando na rua e viu um cachorrinho",
    "um dia o menino encontrou um cachorrinho na rua",
    "o menino estava andando e achou um cachorro pequeno",
    "era uma vez um menino que viu um cachorrinho perdido",
]
PT_MIDDLES = [
    "ele gostou do cachorrinho e chamou ele",
    "o cachorrinho seguiu o menino até a casa",
    "ele escondeu o cachorrinho dentro do roupeiro",
    "a mãe achou o cachorrinho e brigou com o menino",
    "o menino pediu por favor para ficar com o cachorro",
    "a mãe deixou o menino ficar com o cachorrinho",
    "eles fizeram uma casinha para o cachorro no quintal",
    "o cachorrinho ficou muito feliz na casinha nova",
]
PT_FILLERS = [
    "aí né",
    "então",
    "daí",
    "como é que é",
]

EN_OPENERS = [
    "the mother is washing dishes at the sink",
    "a woman stands at the kitchen sink drying a plate",
    "in the kitchen the mother is doing the dishes",
    "there is a lady washing dishes by the window",
]
EN_MIDDLES = [
    "the sink is overflowing and water runs onto the floor",
    "the boy is standing on a stool reaching for the cookie jar",
    "the stool is tipping over under the boy",
    "the girl is reaching up for a cookie",
    "the boy hands a cookie down to his sister",
    "the mother does not notice the water on the floor",
    "the cookie jar sits on the top shelf of the cabinet",
    "the curtains are open and the garden is visible outside",
]
EN_FILLERS = [
    "um well",
    "you know",
    "let me see",
    "oh",
]


def make_text(rng, openers, middles, fillers, impaired):
    parts = [rng.choice(openers)]
    n = rng.randint(3, 5) if impaired else rng.randint(5, 8)
    chosen = rng.sample(middles, min(n, len(middles)))
    for sentence in chosen:
        if impaired and rng.random() < 0.5:
            parts.append(rng.choice(fillers))
        parts.append(sentence)
        if impaired and rng.random() < 0.4:
            # repetition: the hallmark the lexical measures should pick up
            parts.append(sentence)
    return ". ".join(parts).capitalize() + "."


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"{path}: {len(rows)} rows")


def make_corpus(prefix, language, n_ad, n_c, openers, middles, fillers, seed, splits=None):
    rng = random.Random(seed)
    rows = []
    for i in range(n_ad + n_c):
        group = "AD" if i < n_ad else "C"
        row = {
            "id": f"{prefix}{i + 1:03d}",
            "text": make_text(rng, openers, middles, fillers, group == "AD"),
            "group": group,
            "language": language,
        }
        rows.append(row)
    if splits is not None:
        # deterministic stratified split tagging
        train_frac = splits
        for group in ("AD", "C"):
            members = [r for r in rows if r["group"] == group]
            n_train = round(len(members) * train_frac)
            for j, r in enumerate(members):
                r["split"] = "train" if j < n_train else "test"
    return rows


def main():
    ROOT.mkdir(exist_ok=True)
    write_jsonl(
        ROOT / "dogstory40.jsonl",
        make_corpus("pt", "pt", 10, 30, PT_OPENERS, PT_MIDDLES, PT_FILLERS, seed=11),
    )
    write_jsonl(
        ROOT / "adress24.jsonl",
        make_corpus("en", "en", 12, 12, EN_OPENERS, EN_MIDDLES, EN_FILLERS, seed=23, splits=2 / 3),
    )
    write_jsonl(
        ROOT / "dogstory139.jsonl",
        make_corpus("dg", "pt", 23, 116, PT_OPENERS, PT_MIDDLES, PT_FILLERS, seed=37),
    )
    write_jsonl(
        ROOT / "balanced156.jsonl",
        make_corpus("ba", "en", 78, 78, EN_OPENERS, EN_MIDDLES, EN_FILLERS, seed=53),
    )


if __name__ == "__main__":
    main()
