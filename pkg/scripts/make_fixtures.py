"""Regenerate the replay fixtures in tests/fixtures.

Four synthetic agents answer a small corpus at two temperatures:
``ideal`` (shortest correct generator, declared complexity equal to the
target's), ``print-only``, ``ordinal-only`` and ``mixed``. Run
``python scripts/make_fixtures.py --pin`` to also refresh the pinned
ScoreCards after an intentional scoring change.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from superarc.corpus import load_embedded_corpus, write_corpus_file
from superarc.harness import RunConfig, prompt_hash, render_prompt, run_benchmark

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
STAMP = "2025-01-01T00:00:00Z"

IDEAL = {
    "low-01": "a(n) = 2*n",
    "low-10": "a(n) = 2*n - 1",
    "low-12": "a(n) = n + 10",
    "medium-02": "a(1) = 1; a(2) = 1; a(n) = a(n-1) + a(n-2)",
    "medium-03": "a(n) = 2^(n-1)",
    "medium-05": "a(n) = n^2",
    "medium-08": "a(n) = n*(n+1)/2",
    "medium-10": "a(1) = 0; a(2) = 1; a(n) = 2*a(n-1) + a(n-2)",
    "climber-10": "a(n) = (n+1) % 2",
    "climber-16": "a(n) = (n+1) % 2",
    "climber-18": "a(n) = ((n-1) % 3 + 1) / 2",
    "climber-19": "a(n) = 0",
    "climber-24": "a(n) = (n+1) % 2",
}

CONFIG = """\
# replay fixture run
corpus = corpus.json
classes = low, medium, climber
encoding = fixed-width-binary
metric = bdm
ctm_table = 3
temperatures = 1.0, 0.2
template = free-form
output_dir = out
model.ideal.transport = replay-file
model.ideal.location = ideal.jsonl
model.print-only.transport = replay-file
model.print-only.location = print_only.jsonl
model.ordinal-only.transport = replay-file
model.ordinal-only.location = ordinal_only.jsonl
model.mixed.transport = replay-file
model.mixed.location = mixed.jsonl
"""


def _print(it):
    return "print(" + ", ".join(map(str, it.values)) + ")"


def _ordinal(it):
    if it.alphabet != "binary":
        return "not found"
    return "ones at {" + ", ".join(str(i + 1) for i, v in enumerate(it.values) if v) + "}"


def _mixed(it, i, temp):
    # cycles through every outcome the evaluator distinguishes
    choice = (i + (temp < 0.5)) % 6
    if choice == 0:
        return IDEAL[it.id]
    if choice == 1:
        return _print(it)
    if choice == 2:
        return "a(n) = n"
    if choice == 3:
        return "not found"
    if choice == 4:
        return "import itertools  # cannot parse"
    return None  # no record: the item goes unanswered


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pin", action="store_true", help="rewrite pinned_scorecards.json")
    args = ap.parse_args(argv)

    FIXTURES.mkdir(parents=True, exist_ok=True)
    pool = {it.id: it for it in load_embedded_corpus()}
    items = [pool[k] for k in IDEAL]
    write_corpus_file(items, FIXTURES / "corpus.json")
    (FIXTURES / "run.cfg").write_text(CONFIG)
    cfg = RunConfig.load(FIXTURES / "run.cfg")

    personas = {
        "ideal": lambda it, i, t: IDEAL[it.id],
        "print-only": lambda it, i, t: _print(it),
        "ordinal-only": lambda it, i, t: _ordinal(it),
        "mixed": _mixed,
    }
    for spec in cfg.models:
        lines = []
        for i, it in enumerate(items):
            h = prompt_hash(render_prompt(cfg.template, it))
            for t in cfg.temperatures:
                text = personas[spec.id](it, i, t)
                if text is None:
                    continue
                rec = {"prompt_hash": h, "model": spec.id, "temperature": t, "response_text": text, "timestamp": STAMP}
                if spec.id == "ideal":
                    rec["model_complexity"] = "target"
                lines.append(json.dumps(rec, sort_keys=True))
        cfg.resolve(spec.location).write_text("\n".join(lines) + "\n")

    if args.pin:
        result = run_benchmark(cfg, write=False)
        pinned = [c.to_json() for c in result.scorecards]
        (FIXTURES / "pinned_scorecards.json").write_text(json.dumps(pinned, indent=1, sort_keys=True) + "\n")
        for c in result.scorecards:
            print(c.model_id, [round(r, 3) for r in c.rho], round(c.phi, 4))


if __name__ == "__main__":
    main()
