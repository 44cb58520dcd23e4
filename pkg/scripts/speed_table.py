"""Wall-clock comparison of the filter families on a large test system.

Times updating-only runs (no retention, no smoothing) of each requested
algorithm on one simulated series from the m=10, p=5 speed model and prints
the median over repetitions.  IMM(N) runs h^N Kalman steps per period
against GPB(N)'s h^(N+1), so the expected picture is IMM(1) fastest and a
roughly h-fold jump per extra order of either family.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

import regimekf as rk
from reference_models import speed_model


def median_wall_clock(fn, reps: int) -> float:
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1000, help="series length")
    ap.add_argument("--reps", type=int, default=7, help="repetitions per algorithm")
    ap.add_argument(
        "--algos",
        default="imm:1,imm:2,gpb:1,gpb:2,gpb:3",
        help="comma list like gpb:2,imm:1",
    )
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    specs = [rk.AlgoSpec.parse(tok) for tok in args.algos.split(",") if tok.strip()]
    model = speed_model()
    sim = rk.simulate(model, args.n, seed=args.seed)
    y = sim.observations

    print(f"updating-only wall clock, n={args.n}, median of {args.reps}")
    print(f"{'algo':>8}  {'seconds':>9}  {'per period':>11}")
    rows = []
    for spec in specs:
        t = median_wall_clock(lambda: spec.run(model, y), args.reps)
        rows.append((spec.tag, t))
        print(f"{spec.tag:>8}  {t:9.3f}  {t / args.n * 1e3:9.3f}ms")
    fastest = min(rows, key=lambda r: r[1])
    print(f"fastest: {fastest[0]} ({fastest[1]:.3f}s)")


if __name__ == "__main__":
    main()
