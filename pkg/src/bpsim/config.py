"""Run configuration: key-value config files, validation, preset scenario.

Config files are plain text, one ``key = value`` per line, ``#`` comments.
``flow`` may repeat; every other key may not.  Example::

    grid = 8x8
    capacity = 1
    algorithm = qlsp-bp
    slots = 100000
    lambda = 0.4
    flow = (1,3) -> (2,5)         # grid labels, rate from lambda
    flow = (2,3) -> (2,7) @ 0.25  # explicit per-flow rate

On a grid topology endpoints may be 1-based ``(row,col)`` labels or raw node
ids; edge-file topologies use node ids only.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .bias import ALGORITHMS, DEFAULT_B_MAX
from .queueing import TrafficFlow
from .topology import Topology, all_pairs_hops, build_grid, load_edge_file


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class FlowSpec:
    source: int
    destination: int
    rate: Optional[float] = None  # None: track the config-level lambda


@dataclass(frozen=True)
class SimConfig:
    slots: int
    algorithm: str
    grid: Optional[Tuple[int, int]] = None
    edges_file: Optional[str] = None
    capacity: float = 1.0
    seed: int = 1
    default_rate: Optional[float] = None
    flows: Tuple[FlowSpec, ...] = ()
    alpha: float = 1.0
    gamma: float = 1.0
    b_max: float = DEFAULT_B_MAX
    warmup: int = 0

    def with_overrides(self, **kwargs) -> "SimConfig":
        return dataclasses.replace(self, **kwargs)


_LABEL_RE = re.compile(r"^\((\d+)\s*,\s*(\d+)\)$")


def _parse_endpoint(token: str, grid: Optional[Tuple[int, int]]) -> int:
    token = token.strip()
    m = _LABEL_RE.match(token)
    if m:
        if grid is None:
            raise ValueError("grid labels need a grid topology")
        row, col = int(m.group(1)), int(m.group(2))
        rows, cols = grid
        if not (1 <= row <= rows and 1 <= col <= cols):
            raise ValueError(f"label ({row},{col}) outside {rows}x{cols} grid")
        return (row - 1) * cols + (col - 1)
    try:
        return int(token)
    except ValueError:
        raise ValueError(f"endpoint {token!r} is neither a node id nor (row,col)") from None


def _parse_flow(value: str, grid: Optional[Tuple[int, int]]) -> FlowSpec:
    rate: Optional[float] = None
    body = value
    if "@" in value:
        body, rate_part = value.rsplit("@", 1)
        try:
            rate = float(rate_part)
        except ValueError:
            raise ValueError(f"flow rate {rate_part.strip()!r} is not a number") from None
        if rate < 0:
            raise ValueError("flow rate must be >= 0")
    parts = body.split("->")
    if len(parts) != 2:
        raise ValueError("flow must look like 'src -> dst' or 'src -> dst @ rate'")
    src = _parse_endpoint(parts[0], grid)
    dst = _parse_endpoint(parts[1], grid)
    if src == dst:
        raise ValueError("flow source and destination must differ")
    return FlowSpec(src, dst, rate)


def parse_config(text: str, base_dir: Optional[Path] = None) -> SimConfig:
    """Parse config text; raises ConfigError naming the bad field."""
    raw: dict[str, str] = {}
    flow_values: list[str] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "flow":
            flow_values.append(value)
            continue
        if key in raw:
            raise ConfigError(key, "duplicate key")
        raw[key] = value

    known = {
        "grid", "edges_file", "capacity", "algorithm", "slots", "seed",
        "lambda", "alpha", "gamma", "b_max", "warmup",
    }
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown key")

    def take_number(key: str, conv, default=None):
        if key not in raw:
            return default
        try:
            return conv(raw[key])
        except ValueError:
            raise ConfigError(key, f"bad value {raw[key]!r}") from None

    grid: Optional[Tuple[int, int]] = None
    if "grid" in raw:
        m = re.match(r"^(\d+)\s*[xX]\s*(\d+)$", raw["grid"].strip())
        if not m:
            raise ConfigError("grid", f"expected ROWSxCOLS, got {raw['grid']!r}")
        grid = (int(m.group(1)), int(m.group(2)))
        if grid[0] < 1 or grid[1] < 1:
            raise ConfigError("grid", "dimensions must be positive")

    edges_file = raw.get("edges_file")
    if grid is not None and edges_file is not None:
        raise ConfigError("edges_file", "give either grid or edges_file, not both")
    if grid is None and edges_file is None:
        raise ConfigError("grid", "topology missing: set grid or edges_file")
    if edges_file is not None and base_dir is not None and not Path(edges_file).is_absolute():
        edges_file = str(base_dir / edges_file)

    if "slots" not in raw:
        raise ConfigError("slots", "required")
    if "algorithm" not in raw:
        raise ConfigError("algorithm", "required")

    flows = []
    for value in flow_values:
        try:
            flows.append(_parse_flow(value, grid))
        except ValueError as exc:
            raise ConfigError("flow", str(exc)) from None

    cfg = SimConfig(
        slots=take_number("slots", int),
        algorithm=raw["algorithm"].strip().lower(),
        grid=grid,
        edges_file=edges_file,
        capacity=take_number("capacity", float, 1.0),
        seed=take_number("seed", int, 1),
        default_rate=take_number("lambda", float, None),
        flows=tuple(flows),
        alpha=take_number("alpha", float, 1.0),
        gamma=take_number("gamma", float, 1.0),
        b_max=take_number("b_max", float, DEFAULT_B_MAX),
        warmup=take_number("warmup", int, 0),
    )
    return cfg


def build_topology(cfg: SimConfig) -> Topology:
    if cfg.grid is not None:
        return build_grid(cfg.grid[0], cfg.grid[1], cfg.capacity)
    assert cfg.edges_file is not None
    return load_edge_file(cfg.edges_file)


def materialize_flows(cfg: SimConfig) -> Tuple[TrafficFlow, ...]:
    """Resolve per-flow rates against the config-level lambda."""
    flows = []
    for k, spec in enumerate(cfg.flows):
        rate = spec.rate if spec.rate is not None else cfg.default_rate
        if rate is None:
            raise ConfigError("flow", f"flow #{k + 1} has no rate and lambda is unset")
        try:
            flows.append(TrafficFlow(spec.source, spec.destination, rate))
        except ValueError as exc:
            raise ConfigError("flow", f"flow #{k + 1}: {exc}") from None
    return tuple(flows)


def validate_config(cfg: SimConfig) -> Topology:
    """Full semantic check; returns the built topology on success."""
    if cfg.slots < 1:
        raise ConfigError("slots", "must be >= 1")
    if not (0 <= cfg.warmup < cfg.slots):
        raise ConfigError("warmup", "must lie in [0, slots)")
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError("algorithm", f"unknown {cfg.algorithm!r}; choose from {ALGORITHMS}")
    if not (0.0 <= cfg.alpha <= 1.0):
        raise ConfigError("alpha", "must lie in [0, 1]")
    if not (0.0 <= cfg.gamma <= 1.0):
        raise ConfigError("gamma", "must lie in [0, 1]")
    if cfg.b_max < 0:
        raise ConfigError("b_max", "must be >= 0")
    if cfg.capacity < 0:
        raise ConfigError("capacity", "must be >= 0")
    try:
        topo = build_topology(cfg)
    except (ValueError, OSError) as exc:
        raise ConfigError("edges_file" if cfg.edges_file else "grid", str(exc)) from None
    flows = materialize_flows(cfg)
    hops = all_pairs_hops(topo)
    for k, flow in enumerate(flows):
        for name, node in (("source", flow.source), ("destination", flow.destination)):
            if not (0 <= node < topo.n_nodes):
                raise ConfigError("flow", f"flow #{k + 1} {name} {node} out of range")
        if not np.isfinite(hops[flow.source, flow.destination]):
            raise ConfigError(
                "flow",
                f"flow #{k + 1} destination unreachable from source "
                f"({flow.source} -> {flow.destination})",
            )
    return topo


# Eight sources on an 8x8 unit-capacity grid, spread so several flows cross.
_PRESET_FLOWS = (
    ((1, 3), (2, 5)),
    ((2, 3), (2, 7)),
    ((2, 2), (1, 6)),
    ((3, 4), (2, 7)),
    ((1, 1), (1, 7)),
    ((4, 3), (5, 4)),
    ((4, 6), (6, 6)),
    ((5, 3), (5, 6)),
)


def paper_scenario(
    algorithm: str = "qlsp-bp",
    lam: float = 0.1,
    slots: int = 100_000,
    seed: int = 1,
) -> SimConfig:
    """Reference benchmark: 8x8 grid, capacity 1, eight Poisson flows that all
    share the rate ``lam``."""
    cols = 8
    flows = tuple(
        FlowSpec((r1 - 1) * cols + (c1 - 1), (r2 - 1) * cols + (c2 - 1))
        for (r1, c1), (r2, c2) in _PRESET_FLOWS
    )
    return SimConfig(
        slots=slots,
        algorithm=algorithm,
        grid=(8, 8),
        capacity=1.0,
        seed=seed,
        default_rate=lam,
        flows=flows,
    )


def paper_scenario_text(
    algorithm: str = "qlsp-bp", lam: float = 0.1, slots: int = 100_000, seed: int = 1
) -> str:
    """The preset as a config file body (round-trips through parse_config)."""
    lines = [
        "# 8x8 grid benchmark: eight equal-rate Poisson flows",
        "grid = 8x8",
        "capacity = 1",
        f"algorithm = {algorithm}",
        f"slots = {slots}",
        f"seed = {seed}",
        f"lambda = {lam}",
    ]
    for (r1, c1), (r2, c2) in _PRESET_FLOWS:
        lines.append(f"flow = ({r1},{c1}) -> ({r2},{c2})")
    return "\n".join(lines) + "\n"
