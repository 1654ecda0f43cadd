#!/usr/bin/env python3
"""Map where one-step call values go negative as the rate leaves the
feasibility band, and watch the negative set shrink away as the step length
drops.

    python scripts/negativity_sweep.py --tau 5.0
    python scripts/negativity_sweep.py --rate 0.05 --tau-ladder 5,2,1,0.5,0.1
"""
from __future__ import annotations

import argparse

import numpy as np

from discrete_hedge import (
    LognormalParams,
    feasibility_interval,
    lognormal_family,
    shrinkage_profile,
)


def fmt_report(rep) -> str:
    if rep.is_empty:
        return f"empty (min value {rep.min_value: .3e})"
    spans = ", ".join(f"[{lo:.4f}, {hi:.4f}]" for lo, hi in rep.intervals)
    return f"{spans}  min {rep.min_value: .6f} at spot {rep.argmin_spot:.4f}"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mean-rate", type=float, default=0.05)
    ap.add_argument("--vol", type=float, default=0.2)
    ap.add_argument("--strike", type=float, default=100.0)
    ap.add_argument("--tau", type=float, default=5.0)
    ap.add_argument("--rate", type=float, default=None,
                    help="fix the rate and sweep tau instead")
    ap.add_argument("--tau-ladder", default="5,2,1,0.5,0.2,0.1")
    ap.add_argument("--rate-count", type=int, default=9)
    args = ap.parse_args()

    params = LognormalParams(args.mean_rate, args.vol, args.tau, 0.0)
    step = params.to_step()
    r_lo, r_hi = feasibility_interval(step.dist, args.tau)
    print(f"feasibility band for rates: [{r_lo:.6f}, {r_hi:.6f}]")
    print()

    if args.rate is None:
        # sweep rates through and past the band at fixed tau
        width = r_hi - r_lo
        rates = np.linspace(r_lo - width, r_hi + width, args.rate_count)
        for rate in rates:
            fam = lognormal_family(args.mean_rate, args.vol, float(rate))
            rep = shrinkage_profile(fam, [args.tau], args.strike)[0]
            mark = " " if r_lo <= rate <= r_hi else "*"
            print(f"rate {rate: .6f} {mark}  {fmt_report(rep)}")
        print()
        print("* = outside the feasibility band")
    else:
        taus = [float(t) for t in args.tau_ladder.split(",")]
        fam = lognormal_family(args.mean_rate, args.vol, args.rate)
        for tau, rep in zip(taus, shrinkage_profile(fam, taus, args.strike)):
            print(f"tau {tau:6.2f}  {fmt_report(rep)}")


if __name__ == "__main__":
    main()
