"""Bias matrices that steer backpressure toward shorter or less congested routes.

A bias matrix B has shape (N, N): B[i, c] is added to node i's backlog for
commodity c when link weights are computed.  Every engine keeps
0 <= B <= b_max and B[c, c] == 0.  Engines differ in what they know:

* zero_bias        - plain backpressure, no routing hint.
* sp_bias          - static hop counts to each destination.
* bpmin_bias       - per-slot global recompute: cheapest total downstream
                     backlog over all routes (needs network-wide state).
* ql_bias/qlsp_bias- learned estimates of downstream backlog maintained by
                     local value-iteration updates (ql_update).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .topology import Topology

DEFAULT_B_MAX = 1e5


def _segment_min(values: np.ndarray, offsets: np.ndarray, fill: float) -> np.ndarray:
    """Row-block minima of a (L, D) array; block s is rows
    offsets[s]:offsets[s+1].  Empty blocks yield ``fill``."""
    n_seg = len(offsets) - 1
    n_rows, n_cols = values.shape
    out = np.full((n_seg, n_cols), fill, dtype=np.float64)
    starts = offsets[:-1]
    nonempty = offsets[1:] > starts
    if n_rows and nonempty.any():
        # reduceat chokes on start == n_rows (only happens for empty trailing
        # blocks); clamp, then let the mask discard those rows.
        red = np.minimum.reduceat(values, np.minimum(starts, n_rows - 1), axis=0)
        out[nonempty] = red[nonempty]
    return out


def zero_bias(n_nodes: int) -> np.ndarray:
    return np.zeros((n_nodes, n_nodes), dtype=np.float64)


def sp_bias(hop_matrix: np.ndarray, b_max: float = DEFAULT_B_MAX) -> np.ndarray:
    """Static bias equal to the hop count to each destination, capped at b_max
    (which also absorbs unreachable pairs)."""
    bias = np.minimum(hop_matrix.astype(np.float64, copy=True), b_max)
    np.fill_diagonal(bias, 0.0)
    return bias


@dataclass(frozen=True)
class QTables:
    """Per-link estimates of downstream congestion cost.

    ``values`` has one row per directed link in topology order and one column
    per commodity: values[l, c] estimates the cost-to-go for commodity c after
    crossing link l.  Tables start at zero, an optimistic guess that decays
    toward honest estimates as updates run.
    """

    topo: Topology
    values: np.ndarray
    alpha: float = 1.0
    gamma: float = 1.0
    b_max: float = DEFAULT_B_MAX

    @classmethod
    def zeros(
        cls,
        topo: Topology,
        alpha: float = 1.0,
        gamma: float = 1.0,
        b_max: float = DEFAULT_B_MAX,
    ) -> "QTables":
        if not (0.0 <= alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")
        if not (0.0 <= gamma <= 1.0):
            raise ValueError("gamma must lie in [0, 1]")
        if b_max < 0:
            raise ValueError("b_max must be >= 0")
        vals = np.zeros((topo.n_links, topo.n_nodes), dtype=np.float64)
        return cls(topo=topo, values=vals, alpha=alpha, gamma=gamma, b_max=b_max)

    def get(self, i: int, j: int, commodity: int) -> float:
        return float(self.values[self.topo.link_id(i, j), commodity])

    def min_over_next_hop(self) -> np.ndarray:
        """(N, N) array: entry [i, c] is min over i's out-links of the table
        value for c; nodes with no out-links get b_max."""
        return _segment_min(self.values, self.topo.out_offsets, self.b_max)

    def rows(self) -> Iterator[Tuple[int, int, np.ndarray]]:
        """Yield (src, dst, per-commodity values) per link, for dumps."""
        for idx, (i, j) in enumerate(self.topo.links):
            yield i, j, self.values[idx]


@dataclass(frozen=True)
class ObservableInfo:
    """What any single node may legitimately read during one update:

    * its own backlog row and those of its out-neighbors (``queues`` carries
      the full U(t) snapshot; updates only index rows for link endpoints);
    * its out-neighbors' tables from the previous slot (``neighbor_tables``).
    """

    queues: np.ndarray
    neighbor_tables: "QTables"


def ql_update(tables: QTables, info: ObservableInfo) -> QTables:
    """One synchronous sweep of the per-link value iteration.

    Entry (i -> j, c) becomes (1 - alpha) * old + alpha * [U_j^(c) +
    gamma * min_k Qj(j -> k, c)], where Qj is read from
    ``info.neighbor_tables`` (the previous slot's tables), so every entry
    updates against the same stale snapshot regardless of sweep order.
    When j is the commodity's destination the bracketed lookahead term is
    zero: the packet is done once it crosses the link.  Results clamp to
    [0, b_max].
    """
    topo = tables.topo
    lookahead = info.neighbor_tables.min_over_next_hop()
    np.fill_diagonal(lookahead, 0.0)  # nothing left to pay at the destination
    target = info.queues + tables.gamma * lookahead  # (N, N), row j col c
    new_values = (1.0 - tables.alpha) * tables.values + tables.alpha * target[
        topo.link_dst
    ]
    np.clip(new_values, 0.0, tables.b_max, out=new_values)
    return replace(tables, values=new_values)


def ql_bias(tables: QTables) -> np.ndarray:
    """B[i, c] = best table value over i's out-links; b_max with no out-links."""
    bias = tables.min_over_next_hop()
    np.fill_diagonal(bias, 0.0)
    return bias


def qlsp_bias(tables: QTables, hop_matrix: np.ndarray) -> np.ndarray:
    """Learned congestion estimate plus hop count, the sum capped at b_max."""
    bias = tables.min_over_next_hop() + hop_matrix
    np.minimum(bias, tables.b_max, out=bias)  # also maps unreachable (inf) down
    np.fill_diagonal(bias, 0.0)
    return bias


class _ReversedGraph:
    """CSR structure of the reversed topology, rebuilt only when edge costs
    change.  Reversed edge (j -> i) mirrors link (i -> j); walking it costs
    entering j in the forward direction, so its weight is U[j, c]."""

    def __init__(self, topo: Topology) -> None:
        n = topo.n_nodes
        order = np.lexsort((topo.link_src, topo.link_dst))
        self.rev_src = topo.link_dst[order]  # sorted
        self.rev_dst = topo.link_src[order]
        counts = np.bincount(self.rev_src, minlength=n)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])
        self.n = n

    def matrix(self, edge_cost_per_src: np.ndarray) -> csr_matrix:
        data = edge_cost_per_src[self.rev_src].astype(np.float64)
        return csr_matrix((data, self.rev_dst, self.indptr), shape=(self.n, self.n))


def bpmin_bias(
    queue_lengths: np.ndarray,
    topo: Topology,
    b_max: float = DEFAULT_B_MAX,
    *,
    _rev: _ReversedGraph | None = None,
    _reachable: np.ndarray | None = None,
) -> np.ndarray:
    """Cheapest-route downstream backlog, recomputed from the full U snapshot.

    B[i, c] is the minimum over directed routes i -> c of the summed backlog
    of commodity c at every node after i on the route.  Equivalently the
    unique bounded fixed point of B[i, c] = min over out-neighbors j of
    (U[j, c] + B[j, c]) with B[c, c] = 0; computed here as shortest paths
    from c on the reversed graph with entering-node costs.  Unreachable
    pairs get b_max, and finite values clamp to b_max too.
    """
    n = topo.n_nodes
    rev = _rev if _rev is not None else _ReversedGraph(topo)
    if _reachable is None:
        from .topology import all_pairs_hops

        _reachable = np.isfinite(all_pairs_hops(topo))
    bias = np.where(_reachable, 0.0, b_max)
    active = np.flatnonzero(queue_lengths.any(axis=0))
    for c in active.tolist():
        dist = dijkstra(rev.matrix(queue_lengths[:, c]), indices=c)
        bias[:, c] = np.minimum(dist, b_max)
    np.fill_diagonal(bias, 0.0)
    return bias


class BiasEngine:
    """Per-slot bias provider.  ``compute`` is called once per slot with the
    U(t) snapshot, before scheduling, and returns B(t).  The base class is
    plain backpressure: no bias at all."""

    name: str = "bp"

    def __init__(self, topo: Topology) -> None:
        self._zero = zero_bias(topo.n_nodes)

    def compute(self, queue_lengths: np.ndarray, slot: int) -> np.ndarray:
        return self._zero


class ShortestPathBias(BiasEngine):
    name = "sp-bp"

    def __init__(self, topo: Topology, hop_matrix: np.ndarray, b_max: float) -> None:
        self._bias = sp_bias(hop_matrix, b_max)

    def compute(self, queue_lengths: np.ndarray, slot: int) -> np.ndarray:
        return self._bias


class MinBacklogBias(BiasEngine):
    name = "bpmin"

    def __init__(self, topo: Topology, hop_matrix: np.ndarray, b_max: float) -> None:
        self._topo = topo
        self._b_max = b_max
        self._rev = _ReversedGraph(topo)
        self._reachable = np.isfinite(hop_matrix)

    def compute(self, queue_lengths: np.ndarray, slot: int) -> np.ndarray:
        return bpmin_bias(
            queue_lengths,
            self._topo,
            self._b_max,
            _rev=self._rev,
            _reachable=self._reachable,
        )


class QLearningBias(BiasEngine):
    """Maintains Q-tables across slots; each compute() runs one update sweep
    against the previous slot's tables, then derives the bias.  With
    ``add_hops`` the static hop count joins the learned term (sum capped)."""

    def __init__(
        self,
        topo: Topology,
        hop_matrix: np.ndarray,
        alpha: float,
        gamma: float,
        b_max: float,
        add_hops: bool = False,
    ) -> None:
        self.tables = QTables.zeros(topo, alpha=alpha, gamma=gamma, b_max=b_max)
        self._hops = hop_matrix
        self._add_hops = add_hops
        self.name = "qlsp-bp" if add_hops else "ql-bp"

    def compute(self, queue_lengths: np.ndarray, slot: int) -> np.ndarray:
        info = ObservableInfo(queues=queue_lengths, neighbor_tables=self.tables)
        self.tables = ql_update(self.tables, info)
        if self._add_hops:
            return qlsp_bias(self.tables, self._hops)
        return ql_bias(self.tables)


ALGORITHMS = ("bp", "sp-bp", "bpmin", "ql-bp", "qlsp-bp")


def make_engine(
    algorithm: str,
    topo: Topology,
    hop_matrix: np.ndarray,
    alpha: float = 1.0,
    gamma: float = 1.0,
    b_max: float = DEFAULT_B_MAX,
) -> BiasEngine:
    if algorithm == "bp":
        return BiasEngine(topo)
    if algorithm == "sp-bp":
        return ShortestPathBias(topo, hop_matrix, b_max)
    if algorithm == "bpmin":
        return MinBacklogBias(topo, hop_matrix, b_max)
    if algorithm == "ql-bp":
        return QLearningBias(topo, hop_matrix, alpha, gamma, b_max, add_hops=False)
    if algorithm == "qlsp-bp":
        return QLearningBias(topo, hop_matrix, alpha, gamma, b_max, add_hops=True)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
