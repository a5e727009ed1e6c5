"""Build the shipped word-autocompletion mock-sampler fixture.

Produces src/adaptmt/data/wlac_fixture.json: a 200-query suite plus the
hypothesis lists the mock sampler serves, keyed by (source, prefix,
temperature bucket). Gold words are planted at controlled depths so that
widening the scan (more hypotheses, higher top-k, more runs) strictly
grows the answered set, and filler words never collide with any typed
prefix.

Run from the repo root: python3 tools/make_wlac_fixture.py
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from adaptmt.wlac import WlacConfig, fixture_key, run_temperatures

SEED = 7
OUT = Path(__file__).resolve().parent.parent / "src" / "adaptmt" / "data" / "wlac_fixture.json"

# Gold words and the prefixes users type; fillers must never start with these.
GOLDS = [
    "quarantine", "vaccine", "serology", "infection", "ventilator",
    "antibody", "mutation", "pathogen", "respirator", "immunity",
    "Quarantine", "Vaccine",
]
TYPED = {
    "quarantine": "qu", "vaccine": "va", "serology": "se", "infection": "in",
    "ventilator": "ve", "antibody": "an", "mutation": "mu", "pathogen": "pa",
    "respirator": "re", "immunity": "im", "Quarantine": "Qu", "Vaccine": "Va",
}
FILLERS = [
    "border", "dwell", "folk", "gale", "harbor", "kiln", "lumen", "noble",
    "oxide", "brook", "cedar", "dune", "fjord", "glade", "knoll", "loch",
    "bay", "creek", "delta", "fen",
]

BUCKETS = ["1.0", "1.1", "1.2", "1.3"]


def filler_sentence(rng: random.Random) -> str:
    return " ".join(rng.sample(FILLERS, rng.randint(2, 3)))


def plant(sentence: str, word: str, rng: random.Random) -> str:
    tokens = sentence.split()
    tokens.insert(rng.randint(0, len(tokens)), word)
    return " ".join(tokens)


def main() -> None:
    rng = random.Random(2024)
    temps = run_temperatures(WlacConfig(seed=SEED))
    run_buckets = [f"{int(t * 10 + 1e-9) / 10:.1f}" for t in temps]
    late_buckets = sorted({b for b in run_buckets[1:] if b != run_buckets[0]})
    assert late_buckets, "seed must give at least one non-first-run bucket"

    for filler in FILLERS:
        for typed in TYPED.values():
            assert not filler.casefold().startswith(typed.casefold()), (filler, typed)

    entries: dict[str, list[str]] = {}
    queries: list[dict] = []

    def base_lists(source: str, prefix: str = "") -> None:
        # Run-1 bucket carries 20 hypotheses (deep scan targets live there);
        # other buckets carry 10.
        for bucket in BUCKETS:
            depth = 20 if bucket == run_buckets[0] else 10
            key = fixture_key(source, prefix or None, float(bucket))
            sentences = [filler_sentence(rng) for _ in range(depth)]
            if prefix:
                sentences = [f"{prefix} {s}" for s in sentences]
            entries[key] = sentences

    def add_query(i: int, scenario: str) -> None:
        source = f"sample sentence {i:03d}"
        gold = GOLDS[i % len(GOLDS)]
        typed = TYPED[gold]
        left = ""
        right = "trailing words" if i % 2 else ""
        base_lists(source)

        if scenario == "run1_shallow":
            bucket, index = run_buckets[0], rng.randint(0, 9)
        elif scenario == "wide_only":
            bucket, index = run_buckets[0], rng.randint(10, 19)
        elif scenario == "late_run":
            bucket, index = rng.choice(late_buckets), rng.randint(0, 9)
        elif scenario == "prefix":
            left = "The treatment began"
            base_lists(source, prefix=left)
            key = fixture_key(source, left, float(run_buckets[0]))
            hyps = entries[key]
            index = rng.randint(0, 9)
            hyps[index] = f"{left} {plant(filler_sentence(rng), gold, rng)}"
            queries.append({"source": source, "typed": typed, "left": left,
                            "right": right, "gold": gold, "scenario": scenario})
            return
        else:  # absent
            queries.append({"source": source, "typed": typed, "left": left,
                            "right": right, "gold": None, "scenario": scenario})
            return

        key = fixture_key(source, None, float(bucket))
        entries[key][index] = plant(entries[key][index], gold, rng)
        queries.append({"source": source, "typed": typed, "left": left,
                        "right": right, "gold": gold, "scenario": scenario})

    plan = (["run1_shallow"] * 60 + ["wide_only"] * 40 + ["late_run"] * 40
            + ["prefix"] * 30 + ["absent"] * 30)
    assert len(plan) == 200
    for i, scenario in enumerate(plan):
        add_query(i, scenario)

    fixture = {
        "seed": SEED,
        "run_buckets": run_buckets,
        "entries": entries,
        "queries": queries,
    }
    OUT.write_text(json.dumps(fixture, ensure_ascii=False, indent=0) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({OUT.stat().st_size} bytes, {len(entries)} keys)")


if __name__ == "__main__":
    main()
