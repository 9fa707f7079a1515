"""Exact gap |E((X^(n)_t)^m) - E(X_t^m)| for n up to 1e15.

Shows the n^(-exp(-t)) decay and the smallest power of ten at which each gap
falls below a threshold.

    python scripts/moment_gap_scaling.py --threshold 0.02
"""

import argparse
import math

from bsml.coalescent import scaled_raw_moment
from bsml.mlprocess import ml_moment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--threshold", type=float, default=0.02)
    ap.add_argument("--max-exp", type=int, default=15)
    args = ap.parse_args()

    for t in (0.5, 1.0):
        for m in (1, 2, 3):
            limit = ml_moment(math.exp(-t), m)
            gaps = [(e, abs(scaled_raw_moment(10**e, t, m) - limit)) for e in range(2, args.max_exp + 1)]
            first = next((e for e, g in gaps if g < args.threshold), None)
            ratios = [a / b for (_, a), (_, b) in zip(gaps, gaps[1:]) if b > 0]
            line = " ".join(f"{g:.2e}" for _, g in gaps)
            print(f"t={t} m={m}: first n below {args.threshold}: 1e{first}; "
                  f"decay per decade {ratios[-1]:.3f} (10^exp(-t) = {10 ** math.exp(-t):.3f})")
            print(f"    {line}")


if __name__ == "__main__":
    main()
