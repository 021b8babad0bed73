"""Sweeps over (algorithm, lambda, seed) grids, optionally across processes.

Each cell simulates one configuration; rows come back sorted by
(algorithm, lambda, seed) and render to CSV byte-identically no matter how
many worker processes ran, so sweep outputs diff cleanly.
"""

from __future__ import annotations

import io
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .config import SimConfig
from .simulation import run_single

SWEEP_COLUMNS = (
    "algorithm", "lambda", "seed", "slots", "arrivals", "delivered",
    "avg_delay", "p95_delay", "mean_total_queue", "stability_slope", "stable",
)


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    lam: float
    seed: int
    slots: int
    arrivals: int
    delivered: int
    avg_delay: float
    p95_delay: float
    mean_total_queue: float
    stability_slope: float
    stable: bool


@dataclass(frozen=True)
class SweepFailure:
    algorithm: str
    lam: float
    seed: int
    message: str


def _run_cell(cell: Tuple[SimConfig, str, float, int]):
    base, algorithm, lam, seed = cell
    cfg = base.with_overrides(algorithm=algorithm, default_rate=lam, seed=seed)
    try:
        m = run_single(cfg)
    except Exception as exc:  # capture per cell so one bad run cannot sink a sweep
        return SweepFailure(algorithm, lam, seed, f"{type(exc).__name__}: {exc}")
    return SweepRow(
        algorithm=algorithm,
        lam=lam,
        seed=seed,
        slots=m.slots,
        arrivals=m.arrivals,
        delivered=m.delivered,
        avg_delay=m.avg_delay,
        p95_delay=m.p95_delay,
        mean_total_queue=m.mean_total_queue,
        stability_slope=m.stability_slope,
        stable=m.stable,
    )


def run_sweep(
    base_cfg: SimConfig,
    lambdas: Sequence[float],
    algorithms: Sequence[str],
    seeds: Sequence[int],
    jobs: int = 1,
) -> Tuple[List[SweepRow], List[SweepFailure]]:
    """Run every (algorithm, lambda, seed) cell.

    Per-flow explicit rates stay fixed; the swept lambda only feeds flows
    that track the config-level rate.  Failures are collected per cell, not
    raised, so the surviving rows still come back.
    """
    cells = [
        (base_cfg, alg, lam, seed)
        for alg in algorithms
        for lam in lambdas
        for seed in seeds
    ]
    if jobs <= 1:
        results = [_run_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    rows = sorted(
        (r for r in results if isinstance(r, SweepRow)),
        key=lambda r: (r.algorithm, r.lam, r.seed),
    )
    failures = sorted(
        (r for r in results if isinstance(r, SweepFailure)),
        key=lambda r: (r.algorithm, r.lam, r.seed),
    )
    return rows, failures


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow(
            (
                r.algorithm,
                _fmt(r.lam),
                r.seed,
                r.slots,
                r.arrivals,
                r.delivered,
                _fmt(r.avg_delay),
                _fmt(r.p95_delay),
                _fmt(r.mean_total_queue),
                _fmt(r.stability_slope),
                "true" if r.stable else "false",
            )
        )
    return buf.getvalue()
