"""Slot loop tying topology, bias, scheduling, queueing and metrics together.

Each slot runs fixed phases:

1. snapshot U(t);
2. bias engine computes B(t) from the snapshot;
3. scheduler picks commodities and rates from (U(t), B(t));
4. transmissions apply: sends draw from pre-slot backlogs, relays land
   for the next slot, deliveries leave the network;
5. exogenous arrivals are drawn and enqueued (transmittable next slot);
6. metrics record the slot.

Runs are reproducible: one ``random.Random(seed)`` drives every draw, and
no other nondeterminism exists in the loop.
"""

from __future__ import annotations

import csv
import random
from typing import Optional

import numpy as np

from .bias import make_engine
from .config import SimConfig, build_topology, materialize_flows
from .metrics import MetricsCollector, RunMetrics, record_delivery
from .queueing import NetworkState, apply_transmissions, enqueue, queue_matrix, sample_arrivals
from .scheduler import allocate_independent
from .topology import all_pairs_hops

#: Columns of the per-slot trace CSV.
TRACE_COLUMNS = ("slot", "node", "commodity", "queue_len", "offered_out", "offered_in", "arrivals")

_CONSERVATION_CHECK_EVERY = 1024


class _TraceWriter:
    """Sparse per-slot trace: one row per (slot, node, commodity) with any
    nonzero field, so absent rows mean all-zero.  ``queue_len`` is the U(t)
    snapshot before transmissions; offered rates are what the scheduler
    offered during the slot (sent counts may be lower when queues run dry);
    ``arrivals`` counts exogenous packets enqueued during the slot.  One
    final block at slot == run length holds the closing queue snapshot.
    """

    def __init__(self, path: str) -> None:
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(TRACE_COLUMNS)

    def write_slot(self, slot, snapshot, decisions, arrival_counts) -> None:
        offered_out: dict[tuple[int, int], float] = {}
        offered_in: dict[tuple[int, int], float] = {}
        cells = {(int(i), int(c)) for i, c in np.argwhere(snapshot)}
        for dec in decisions:
            i, j = dec.link
            key_out = (i, dec.commodity)
            offered_out[key_out] = offered_out.get(key_out, 0.0) + dec.offered_rate
            key_in = (j, dec.commodity)
            offered_in[key_in] = offered_in.get(key_in, 0.0) + dec.offered_rate
            cells.add(key_out)
            cells.add(key_in)
        cells.update(arrival_counts)
        rows = []
        for node, commodity in cells:
            rows.append(
                (
                    slot,
                    node,
                    commodity,
                    int(snapshot[node, commodity]),
                    _num(offered_out.get((node, commodity), 0)),
                    _num(offered_in.get((node, commodity), 0)),
                    arrival_counts.get((node, commodity), 0),
                )
            )
        rows.sort()
        self._writer.writerows(rows)

    def write_final_snapshot(self, slot: int, snapshot: np.ndarray) -> None:
        rows = [
            (slot, int(i), int(c), int(snapshot[i, c]), 0, 0, 0)
            for i, c in np.argwhere(snapshot)
        ]
        rows.sort()
        self._writer.writerows(rows)

    def close(self) -> None:
        self._fh.close()


def _num(x: float):
    """Render integral floats as ints so trace files stay tidy."""
    return int(x) if float(x).is_integer() else float(x)


def _check_bias(bias: np.ndarray, n_nodes: int, b_max: float, slot: int) -> None:
    if bias.shape != (n_nodes, n_nodes):
        raise RuntimeError(f"bias shape {bias.shape} at slot {slot}")
    if bias.min() < 0.0 or bias.max() > b_max:
        raise RuntimeError(f"bias out of [0, {b_max}] at slot {slot}")
    if np.diagonal(bias).any():
        raise RuntimeError(f"nonzero self-bias at slot {slot}")


def run_single(
    cfg: SimConfig,
    trace_path: Optional[str] = None,
    keep_records: bool = False,
) -> RunMetrics:
    """Simulate one configuration; bit-identical output for equal (cfg, seed).

    With ``warmup`` set, deliveries and queue statistics only count for
    packets created at or after the warmup slot (the network still simulates
    from slot 0).  ``trace_path`` writes the full per-slot trace regardless.
    """
    topo = build_topology(cfg)
    flows = materialize_flows(cfg)
    hops = all_pairs_hops(topo)
    engine = make_engine(
        cfg.algorithm, topo, hops, alpha=cfg.alpha, gamma=cfg.gamma, b_max=cfg.b_max
    )
    rng = random.Random(cfg.seed)
    state = NetworkState(topo.n_nodes)
    collector = MetricsCollector(keep_records=keep_records)
    tracer = _TraceWriter(trace_path) if trace_path else None
    counted_arrivals = 0

    try:
        for slot in range(cfg.slots):
            state.slot = slot
            snapshot = queue_matrix(state)
            bias = engine.compute(snapshot, slot)
            _check_bias(bias, topo.n_nodes, cfg.b_max, slot)
            decisions = allocate_independent(topo, snapshot, bias)
            for pkt in apply_transmissions(state, decisions):
                if pkt.created_slot >= cfg.warmup:
                    record_delivery(collector, pkt, slot)
            arrivals = sample_arrivals(flows, slot, rng, state.next_packet_id)
            if arrivals:
                state.next_packet_id = arrivals[-1][1].id + 1
                for node, pkt in arrivals:
                    enqueue(state, node, pkt)
                if slot >= cfg.warmup:
                    counted_arrivals += len(arrivals)
            if slot >= cfg.warmup:
                collector.record_total_queue(state.total_queued())
            if tracer is not None:
                counts: dict[tuple[int, int], int] = {}
                for node, pkt in arrivals:
                    key = (node, pkt.commodity)
                    counts[key] = counts.get(key, 0) + 1
                tracer.write_slot(slot, snapshot, decisions, counts)
            if slot % _CONSERVATION_CHECK_EVERY == 0:
                state.check_conservation()
        state.check_conservation()
        if tracer is not None:
            tracer.write_final_snapshot(cfg.slots, queue_matrix(state))
    finally:
        if tracer is not None:
            tracer.close()

    return collector.finalize(
        slots=cfg.slots, arrivals=counted_arrivals, delivered=len(collector.delays)
    )
