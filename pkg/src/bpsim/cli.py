"""Command line entry points.

Subcommands: ``run`` (one simulation), ``sweep`` (grid of runs to CSV),
``validate`` (config check only), ``paper-scenario`` (print the preset
benchmark config).  Exit codes: 0 success, 2 configuration error, 3 runtime
failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bias import ALGORITHMS
from .config import ConfigError, parse_config, paper_scenario_text, validate_config
from .metrics import throughput_ratio
from .simulation import run_single
from .sweep import rows_to_csv, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_config(path: str):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    return parse_config(text, base_dir=p.parent)


def _parse_lambdas(spec: str) -> list[float]:
    """Either ``start:stop:step`` (inclusive of stop, within float fuzz) or a
    comma-separated list."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError("lambdas", f"expected start:stop:step, got {spec!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ConfigError("lambdas", f"non-numeric range in {spec!r}") from None
        if step <= 0 or stop < start:
            raise ConfigError("lambdas", "need step > 0 and stop >= start")
        values = []
        k = 0
        while True:
            v = start + k * step
            if v > stop + 1e-9:
                break
            values.append(round(v, 12))
            k += 1
        return values
    try:
        return [float(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ConfigError("lambdas", f"bad value in {spec!r}") from None


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    validate_config(cfg)
    metrics = run_single(cfg, trace_path=args.trace)
    print(f"algorithm={cfg.algorithm}")
    print(f"slots={metrics.slots}")
    print(f"seed={cfg.seed}")
    print(f"arrivals={metrics.arrivals}")
    print(f"delivered={metrics.delivered}")
    print(f"throughput_ratio={throughput_ratio(metrics):.6f}")
    print(f"avg_delay={metrics.avg_delay}")
    print(f"p95_delay={metrics.p95_delay}")
    print(f"mean_total_queue={metrics.mean_total_queue}")
    print(f"stability_slope={metrics.stability_slope}")
    print(f"stable={'true' if metrics.stable else 'false'}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    lambdas = _parse_lambdas(args.lambdas)
    if not lambdas:
        raise ConfigError("lambdas", "empty range")
    algorithms = [a.strip().lower() for a in args.algorithms.split(",") if a.strip()]
    for alg in algorithms:
        if alg not in ALGORITHMS:
            raise ConfigError("algorithms", f"unknown {alg!r}; choose from {ALGORITHMS}")
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError:
        raise ConfigError("seeds", f"bad value in {args.seeds!r}") from None
    if not seeds:
        raise ConfigError("seeds", "empty list")
    probe = cfg if cfg.default_rate is not None else cfg.with_overrides(default_rate=lambdas[0])
    validate_config(probe)

    rows, failures = run_sweep(cfg, lambdas, algorithms, seeds, jobs=args.jobs)
    Path(args.out).write_text(rows_to_csv(rows))
    for f in failures:
        print(
            f"failed: algorithm={f.algorithm} lambda={f.lam} seed={f.seed}: {f.message}",
            file=sys.stderr,
        )
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    return EXIT_RUNTIME if failures else EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    topo = validate_config(cfg)
    print(f"ok: {topo.n_nodes} nodes, {topo.n_links} links, {len(cfg.flows)} flows")
    return EXIT_OK


def _cmd_paper_scenario(args) -> int:
    sys.stdout.write(
        paper_scenario_text(
            algorithm=args.algorithm, lam=args.lam, slots=args.slots, seed=args.seed
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpsim",
        description="Bias-aided backpressure routing simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--trace", default=None, help="write per-slot trace CSV here")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid of runs, one CSV row each")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--lambdas", required=True, help="start:stop:step or comma list")
    p_sweep.add_argument("--algorithms", required=True, help="comma list")
    p_sweep.add_argument("--seeds", required=True, help="comma list of ints")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)

    p_paper = sub.add_parser("paper-scenario", help="print the preset benchmark config")
    p_paper.add_argument("--algorithm", default="qlsp-bp", choices=ALGORITHMS)
    p_paper.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p_paper.add_argument("--slots", type=int, default=100_000)
    p_paper.add_argument("--seed", type=int, default=1)
    p_paper.set_defaults(func=_cmd_paper_scenario)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure, distinct from bad config
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
