"""Pin betting-simulation results on the shipped (3,2) table.

Writes tests/fixtures/martingale_3_2.json with, for every distinct embedded
climber, the max and final capital relative to the initial capital, plus the
median final/initial ratio over 100 seeded random length-11 strings.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from superarc.corpus import by_class, generate_random_binary, load_embedded_corpus
from superarc.ctm import load_table
from superarc.metrics import BdmConfig, bdm
from superarc.scoring import betting_simulation

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "martingale_3_2.json"
SEED = 0


def pins(cfg: BdmConfig) -> dict:
    K = lambda s: bdm(s, cfg)
    climbers = [it.bits for it in by_class(load_embedded_corpus(), "climber") if it.duplicate_of is None]
    runs = {c: betting_simulation(c, 0, K) for c in climbers}
    finals = [betting_simulation(it.bits, 0, K) for it in generate_random_binary(11, 100, SEED)]
    return {
        "table": "3",
        "random_seed": SEED,
        "climber_max_over_initial": {c: r.max_capital / r.initial for c, r in runs.items()},
        "climber_final_over_initial": {c: r.final / r.initial for c, r in runs.items()},
        "random_median_final_over_initial": float(np.median([r.final / r.initial for r in finals])),
    }


if __name__ == "__main__":
    OUT.write_text(json.dumps(pins(BdmConfig(load_table(3))), indent=1, sort_keys=True) + "\n")
    print(f"wrote {OUT}")
