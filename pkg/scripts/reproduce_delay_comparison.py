#!/usr/bin/env python3
"""Compare average packet delay across the five routing algorithms.

Runs the preset 8x8 scenario for each (algorithm, load, seed) cell, prints a
seed-averaged delay table plus pairwise reductions, and optionally writes the
raw rows and a delay-vs-load plot.

Typical invocations:

    python scripts/reproduce_delay_comparison.py --slots 20000
    python scripts/reproduce_delay_comparison.py --lambdas 0.05:0.4:0.05 \
        --seeds 1,2,3 --out rows.csv --plot delay.png
"""

from __future__ import annotations

import argparse
import sys
import time
from collections import defaultdict

from bpsim.bias import ALGORITHMS
from bpsim.cli import _parse_lambdas
from bpsim.config import paper_scenario
from bpsim.sweep import rows_to_csv, run_sweep


def parse_args(argv):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lambdas", default="0.1,0.4", help="loads: comma list or start:stop:step")
    p.add_argument("--seeds", default="1,2,3,4,5", help="comma-separated seeds")
    p.add_argument("--slots", type=int, default=100_000)
    p.add_argument("--algorithms", default=",".join(ALGORITHMS))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="also write raw sweep rows to this CSV")
    p.add_argument("--plot", help="write a delay-vs-load PNG here (needs matplotlib)")
    return p.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    lambdas = _parse_lambdas(args.lambdas)
    seeds = [int(s) for s in args.seeds.split(",")]
    algorithms = args.algorithms.split(",")

    t0 = time.perf_counter()
    rows, failures = run_sweep(paper_scenario(slots=args.slots), lambdas, algorithms, seeds, jobs=args.jobs)
    for f in failures:
        print(f"FAILED cell {f.algorithm} lam={f.lam} seed={f.seed}: {f.error}", file=sys.stderr)

    mean_delay: dict[tuple[str, float], float] = {}
    by_cell = defaultdict(list)
    for r in rows:
        by_cell[(r.algorithm, r.lam)].append(r.avg_delay)
    for key, vals in by_cell.items():
        mean_delay[key] = sum(vals) / len(vals)

    width = max(len(a) for a in algorithms)
    print(f"\naverage delay (slots), mean over {len(seeds)} seeds, {args.slots} slots each")
    print(" " * width + "".join(f"  lam={lam:<8g}" for lam in lambdas))
    for alg in algorithms:
        cells = "".join(f"  {mean_delay.get((alg, lam), float('nan')):<12.2f}" for lam in lambdas)
        print(f"{alg:<{width}}{cells}")

    comparisons = [("ql-bp", "bp"), ("qlsp-bp", "bpmin"), ("sp-bp", "bp"), ("qlsp-bp", "sp-bp")]
    print("\ndelay reduction, 1 - new/old")
    for new_alg, old_alg in comparisons:
        if new_alg not in algorithms or old_alg not in algorithms:
            continue
        parts = []
        for lam in lambdas:
            old = mean_delay.get((old_alg, lam))
            new = mean_delay.get((new_alg, lam))
            parts.append(f"lam={lam:g}: {1 - new / old:6.1%}" if old and new else f"lam={lam:g}:    n/a")
        print(f"{new_alg} vs {old_alg:<8} " + "  ".join(parts))

    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rows_to_csv(rows))
        print(f"\nrows written to {args.out}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        for alg in algorithms:
            ys = [mean_delay.get((alg, lam), float("nan")) for lam in lambdas]
            ax.plot(lambdas, ys, marker="o", label=alg)
        ax.set_xlabel("arrival rate per flow (packets/slot)")
        ax.set_ylabel("average delay (slots)")
        ax.set_yscale("log")
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"plot written to {args.plot}")

    print(f"\ndone in {time.perf_counter() - t0:.0f}s")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
