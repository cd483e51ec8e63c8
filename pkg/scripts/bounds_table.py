"""Tabulate the four lower bounds and the K=2 upper bound against the sample size.

Usage: python3 scripts/bounds_table.py [--sigma 0.1] [--s 5] [--c1 0.05]
"""

import argparse

from kronlearn.bounds import (
    BoundInputs,
    lower_bound_general,
    lower_bound_sparse,
    lower_bound_sparse_gaussian,
    mse_upper_bound_k2,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma", type=float, default=0.1)
    ap.add_argument("--s", type=int, default=5)
    ap.add_argument("--c1", type=float, default=0.05)
    ap.add_argument("--r", type=float, default=0.1)
    ap.add_argument("--dims", type=int, nargs=2, default=[16, 8], help="p1 p2 (square factors)")
    args = ap.parse_args()

    p1, p2 = args.dims
    p = p1 * p2
    print(f"{'N':>8} {'general':>11} {'sparse':>11} {'sp-gauss':>11} {'separable':>11} {'upper K=2':>11}  flags")
    for n in (10, 100, 1_000, 10_000, 100_000, 1_000_000):
        inp = BoundInputs(N=n, m_dims=(p1, p2), p_dims=(p1, p2), sigma=args.sigma, r=args.r, t=0.5,
                          c1=args.c1, s=args.s, sigma_x_norm=args.s / p)
        reps = [lower_bound_general(inp), lower_bound_sparse(inp), lower_bound_sparse_gaussian(inp),
                lower_bound_sparse_gaussian(inp, separable=True)]
        ub = mse_upper_bound_k2(p1, p2, p1, p2, n, args.s / (p * args.sigma**2), args.sigma)
        flags = sorted({f for r in reps for f in r.validity})
        cells = " ".join(f"{r.value:11.3e}" for r in reps)
        print(f"{n:8d} {cells} {ub:11.3e}  {','.join(flags) or '-'}")


if __name__ == "__main__":
    main()
