"""PEXIT thresholds of the reference channel assignments at a desk-scale length.

    python3 scripts/threshold_table.py --n 1200 --seeds 0 1 2
"""

import argparse

import numpy as np

from dbicm import designs
from dbicm.capacity import capacity_report
from dbicm.constellation import gray_qam
from dbicm.ldpc_construct import constrained_peg
from dbicm.pexit import CapacityProfile, pexit_threshold


def thresholds(d, n, seeds, window, samples):
    c = gray_qam(int(d.modulation[:2]))
    off = 10 * np.log10(c.m * d.rate)
    grid = np.arange(window[0] + off - 0.1, window[1] + off + 0.15, 0.05)
    prof = CapacityProfile.from_report(capacity_report(c, d.scheme, grid, samples))
    return [pexit_threshold(constrained_peg(d.assignment(), n, d.rate, s), prof, window, rate=d.rate).threshold_db
            for s in seeds]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1200)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--samples", type=int, default=200_000)
    args = ap.parse_args()

    print(f"{'mod':>6} {'rate':>5} {'DBICM':>8} {'BICM':>8} {'gap':>7} {'ref gap':>8}")
    for mod, rate in [(m, r) for m in ("16qam", "64qam") for r in (0.25, 0.4, 0.5)]:
        dd, db = designs.lookup(mod, rate, True), designs.lookup(mod, rate, False)
        window = (dd.threshold_db - 1.5, db.threshold_db + 2.0)
        td = np.median(thresholds(dd, args.n, args.seeds, window, args.samples))
        tb = np.median(thresholds(db, args.n, args.seeds, window, args.samples))
        print(f"{mod:>6} {rate:5.2f} {td:8.3f} {tb:8.3f} {tb - td:7.3f} {db.threshold_db - dd.threshold_db:8.3f}",
              flush=True)


if __name__ == "__main__":
    main()
