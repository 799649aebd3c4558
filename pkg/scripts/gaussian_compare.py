"""Compare the greedy-cover rate G(X^n)/n with the Gaussian approximation.

Prints one row per n plus the largest constant C with |gap| <= C log2(n+1)/n
over n >= 4, which is the quantity the trend check fits.

    python3 scripts/gaussian_compare.py --p 0.3 --level 0.1 --total 0.2 --max-n 12
"""
import argparse
import math
import sys

from lossyvl.asymptotics import gaussian_approx, rate_distortion
from lossyvl.blocklength import g_rate
from lossyvl.model import hamming, make_instance


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--level", type=float, default=0.1)
    ap.add_argument("--total", type=float, default=0.2, help="eps + delta")
    ap.add_argument("--max-n", type=int, default=12)
    args = ap.parse_args(argv)

    base = make_instance([1 - args.p, args.p], hamming(2), args.level, args.total / 2, args.total / 2)
    sol = rate_distortion(base.probs, base.distortion.matrix, args.level)
    print(f"# R(D) = {sol.rate:.6f} bits, V(D) = {sol.dispersion:.6f} bits^2")
    print("n,g_rate,gaussian_approx,gap,abs_gap_to_R")
    fitted = 0.0
    for n in range(1, args.max_n + 1):
        g = g_rate(base, n)
        approx = gaussian_approx(base, n, sol)
        gap = g - approx
        if n >= 4:
            fitted = max(fitted, abs(gap) * n / math.log2(n + 1))
        print(f"{n},{g:.6f},{approx:.6f},{gap:.6f},{abs(g - sol.rate):.6f}")
    print(f"# fitted C over n >= 4: {fitted:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
