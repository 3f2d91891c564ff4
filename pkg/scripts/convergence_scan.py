#!/usr/bin/env python3
"""Saturation scan for shifted determinant sums.

For a chosen lattice and shift, sweeps the outer exponent m across the k/2
threshold and reports whether the dyadic radius grid saturates (last doubling
adds under 1% of the total).  Convergence is expected exactly when m > k/2.
"""

import argparse
import sys

from detsums.codes import CodeSpec
from detsums.sums import convergence_probe


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--code", default="gaussian-diagonal",
                    choices=["golden", "diagonal-nf", "gaussian-diagonal"])
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--max-radius", type=float, default=64.0)
    args = ap.parse_args()

    params = {"n": args.n} if args.code != "golden" else {}
    lat = CodeSpec(kind=args.code, params=params,
                   normalization="unit-minnorm").resolve()
    radii = [2.0]
    while radii[-1] < args.max_radius:
        radii.append(radii[-1] * 2.0)

    half_rank = lat.k / 2.0
    print(f"lattice rank k = {lat.k}, saturation threshold m > {half_rank:g}")
    for m in (half_rank - 1.0, half_rank, half_rank + 0.5, half_rank + 1.0):
        if m <= 0:
            continue
        curve, saturated = convergence_probe(lat, m, args.c, radii)
        tail = curve.values[-1] - curve.values[-2]
        print(f"m = {m:4.1f}: total {curve.values[-1]:.6g}, "
              f"last doubling adds {100 * tail / curve.values[-1]:5.2f}%, "
              f"saturated = {saturated}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
