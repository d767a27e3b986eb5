"""Optimal delay schemes and capacity gains for square Gray QAM.

    python3 scripts/delay_table.py --orders 16 64 --samples 400000
"""

import argparse
import json

from dbicm.constellation import gray_qam
from dbicm.delay_opt import optimize_delay

RATES = (1 / 4, 1 / 3, 2 / 5, 1 / 2)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", type=int, nargs="+", default=[16, 64])
    ap.add_argument("--samples", type=int, default=400_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write the full search results here")
    args = ap.parse_args()

    out = []
    print(f"{'QAM':>5} {'rate':>5}  {'scheme':<32} {'gap to CM':>9} {'gain':>6}")
    for order in args.orders:
        for rate in RATES:
            res = optimize_delay(gray_qam(order), rate, samples=args.samples, seed=args.seed)
            print(f"{order:>5} {rate:5.3f}  {str(list(res.optimal.delays)):<32} "
                  f"{res.gap_to_cm_db:9.3f} {res.gain_db:6.3f}", flush=True)
            out.append(res.to_dict())
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(out, fh, indent=2)


if __name__ == "__main__":
    main()
