"""Blocklength sweep of the rate sandwich for a Bernoulli source under Hamming distortion.

    python3 scripts/sweep_n.py --p 0.3 --level 0.1 --eps 0.1 --delta 0.1 --max-n 14
"""
import argparse
import sys

from lossyvl.blocklength import SWEEP_COLUMNS, sweep
from lossyvl.model import hamming, make_instance


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--level", type=float, default=0.1)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--max-n", type=int, default=12)
    ap.add_argument("--budget", type=int)
    args = ap.parse_args(argv)

    base = make_instance([1 - args.p, args.p], hamming(2), args.level, args.eps, args.delta)
    print(",".join(SWEEP_COLUMNS))
    for s in sweep(base, args.max_n, args.budget):
        print(",".join(f"{v:.6f}" if isinstance(v, float) else str(v) for v in s.row()))
    return 0


if __name__ == "__main__":
    sys.exit(main())
