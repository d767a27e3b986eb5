"""BER/FER curves of the reference 16-QAM rate-1/4 codes, DBICM and BICM.

    python3 scripts/ber_waterfall.py --n 12000 --dbicm 1.0:0.1:1.4 --bicm 1.5:0.1:1.9
"""

import argparse

from dbicm import designs
from dbicm.cli import parse_grid
from dbicm.constellation import gray_qam
from dbicm.ldpc_construct import constrained_peg
from dbicm.transceiver import FramePipeline, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modulation", default="16qam")
    ap.add_argument("--rate", type=float, default=0.25)
    ap.add_argument("--n", type=int, default=12_000)
    ap.add_argument("--dbicm", default="1.0:0.1:1.4", help="Eb/N0 grid for the DBICM code")
    ap.add_argument("--bicm", default="1.5:0.1:1.9", help="Eb/N0 grid for the BICM code")
    ap.add_argument("--slots", type=int, default=10)
    ap.add_argument("--frames", type=int, default=5)
    ap.add_argument("--min-errors", type=int, default=200)
    ap.add_argument("--max-frames", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    c = gray_qam(int(args.modulation[:-3]))
    print("scheme,ebn0_db,ber,fer,bit_errors,info_bits")
    for dbicm, grid in ((True, args.dbicm), (False, args.bicm)):
        d = designs.lookup(args.modulation, args.rate, dbicm)
        code = constrained_peg(d.assignment(), args.n, d.rate, args.seed)
        pipe = FramePipeline(code, c, d.scheme, args.slots)
        for p in simulate(pipe, parse_grid(grid), args.frames, args.seed,
                          min_bit_errors=args.min_errors, max_frames=args.max_frames):
            t = p.tally
            print(f"{'DBICM' if dbicm else 'BICM'},{p.ebn0_db:.3f},{t.ber:.3e},{t.fer:.3e},"
                  f"{t.bit_errors},{t.info_bits}", flush=True)


if __name__ == "__main__":
    main()
