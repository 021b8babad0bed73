"""Time-slotted simulator for bias-aided backpressure routing.

Packets of many commodities (one per destination) traverse a directed
network of unit-time links.  Each slot, every link independently picks the
commodity with the largest bias-augmented backlog differential and, when
that differential is positive, transmits at capacity.  Bias engines range
from none (plain backpressure) through static hop counts to per-slot global
recomputation and locally learned congestion estimates.
"""

from .bias import (
    ALGORITHMS,
    DEFAULT_B_MAX,
    ObservableInfo,
    QTables,
    bpmin_bias,
    make_engine,
    ql_bias,
    ql_update,
    qlsp_bias,
    sp_bias,
    zero_bias,
)
from .config import (
    ConfigError,
    FlowSpec,
    SimConfig,
    build_topology,
    materialize_flows,
    paper_scenario,
    paper_scenario_text,
    parse_config,
    validate_config,
)
from .metrics import (
    DelayRecord,
    MetricsCollector,
    RunMetrics,
    record_delivery,
    stability_verdict,
    throughput_ratio,
)
from .queueing import (
    NetworkState,
    Packet,
    RateBounds,
    TrafficFlow,
    apply_transmissions,
    enqueue,
    poisson_knuth,
    queue_matrix,
    sample_arrivals,
)
from .scheduler import TransmissionDecision, allocate_independent, optimal_commodity
from .simulation import TRACE_COLUMNS, run_single
from .sweep import SWEEP_COLUMNS, SweepFailure, SweepRow, rows_to_csv, run_sweep
from .topology import (
    UNREACHABLE,
    Topology,
    all_pairs_hops,
    build_grid,
    load_edge_file,
    neighbors,
)

__all__ = [name for name in dir() if not name.startswith("_")]
