"""Build a CTM table and write it in the ctm-table v1 format.

    python scripts/build_ctm.py 3 out/ctm_3_2.txt
    python scripts/build_ctm.py 4 src/superarc/data/ctm_4_2.txt   # ~30 min per core
"""
import argparse
import logging
import time

from superarc.ctm import DEFAULT_BUDGETS, enumerate_machines, write_table

log = logging.getLogger("build_ctm")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("n", type=int)
    ap.add_argument("out")
    ap.add_argument("--budget", type=int)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    t0 = time.perf_counter()
    table = enumerate_machines(
        args.n, args.budget or DEFAULT_BUDGETS[args.n], workers=args.workers, allow_n4=args.n == 4
    )
    log.info(
        "n=%d budget=%d machines=%d halting runs=%d strings=%d max steps=%d in %.1fs",
        table.n, table.step_budget, table.machines_examined, table.total_halting,
        len(table), table.max_observed_steps, time.perf_counter() - t0,
    )
    write_table(table, args.out)


if __name__ == "__main__":
    main()
