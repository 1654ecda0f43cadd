#!/usr/bin/env python3
"""Step-size ladder toward the continuous-hedging limit.

Fixes the horizon, halves the rebalancing interval along a ladder, and fits
the convergence order of the discrete price toward the Black-Scholes value.

    python scripts/bs_convergence.py --total-time 1.0 --n-min 4 --doublings 8
"""
from __future__ import annotations

import argparse

from discrete_hedge import bs_limit_check


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mean-rate", type=float, default=0.05)
    ap.add_argument("--vol", type=float, default=0.2)
    ap.add_argument("--rate", type=float, default=0.09)
    ap.add_argument("--strike", type=float, default=100.0)
    ap.add_argument("--spot", type=float, default=100.0)
    ap.add_argument("--total-time", type=float, default=1.0)
    ap.add_argument("--n-min", type=int, default=4)
    ap.add_argument("--doublings", type=int, default=7)
    args = ap.parse_args()

    n_list = tuple(args.n_min * 2**j for j in range(args.doublings))
    est = bs_limit_check(
        args.mean_rate, args.vol, args.total_time, args.rate,
        args.strike, args.spot, n_list=n_list,
    )

    print(f"{'n':>6} {'tau':>12} {'abs_error':>14} {'rel_error':>12}")
    for n, tau, err, rel in zip(n_list, est.taus, est.errors, est.rel_errors):
        print(f"{n:6d} {tau:12.6f} {err:14.6e} {rel:12.4e}")
    print()
    print(f"reference (continuous-hedging) value: {est.reference:.10f}")
    print(f"fitted order: {est.order:.6f}   coefficient: {est.coefficient:.6e}")
    print(f"max log-residual of the fit: {est.max_log_residual:.3e}")


if __name__ == "__main__":
    main()
