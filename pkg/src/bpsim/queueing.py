"""Per-node per-commodity FIFO queues and the packet-level slot mechanics.

Commodities are destination node ids: queue (i, c) holds packets sitting at
node i that still need to reach node c.  Packets enqueued during slot t (new
arrivals or relays) become transmittable in slot t + 1, never within t.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from typing import Deque, Iterable, List, Optional, Tuple

import numpy as np

from .topology import NodeId


@dataclass(slots=True)
class Packet:
    id: int
    commodity: NodeId
    created_slot: int
    # Slot at which the packet joined its current queue; set on every hop.
    entered_slot: int = -1

    def __post_init__(self) -> None:
        if self.entered_slot < 0:
            self.entered_slot = self.created_slot


@dataclass(frozen=True)
class TrafficFlow:
    """Poisson packet source: ``rate`` packets per slot from source to destination."""

    source: NodeId
    destination: NodeId
    rate: float

    def __post_init__(self) -> None:
        if self.source == self.destination:
            raise ValueError("flow source and destination must differ")
        if not (self.rate >= 0.0 and math.isfinite(self.rate)):
            raise ValueError("flow rate must be finite and >= 0")


@dataclass(frozen=True)
class RateBounds:
    """Per-slot bounds on service and arrivals.

    ``mu_out_max``/``mu_in_max`` bound total offered service out of / into a
    queue; ``a_max`` bounds exogenous arrivals and is informational here
    (Poisson arrivals are unbounded, so it is not enforced per slot).
    """

    mu_out_max: float
    mu_in_max: float
    a_max: float = math.inf


class NetworkState:
    """Mutable queue state for one run.

    ``queue_lengths`` mirrors the FIFO contents at all times so U(t)
    snapshots are O(N^2) copies instead of walks over deques.
    """

    def __init__(self, n_nodes: int) -> None:
        self.n_nodes = n_nodes
        self.slot = 0
        self.queues: List[List[Deque[Packet]]] = [
            [deque() for _ in range(n_nodes)] for _ in range(n_nodes)
        ]
        self.queue_lengths = np.zeros((n_nodes, n_nodes), dtype=np.int64)
        self.created_count = 0
        self.delivered_count = 0
        self.next_packet_id = 0

    def total_queued(self) -> int:
        return int(self.queue_lengths.sum())

    def check_conservation(self) -> None:
        """Every created packet is either still queued or was delivered."""
        in_queues = self.total_queued()
        if self.created_count != in_queues + self.delivered_count:
            raise RuntimeError(
                f"packet conservation broken at slot {self.slot}: "
                f"created={self.created_count} queued={in_queues} "
                f"delivered={self.delivered_count}"
            )
        # The diagonal must stay empty: packets at their destination leave.
        if int(np.diagonal(self.queue_lengths).sum()) != 0:
            raise RuntimeError(f"destination queue non-empty at slot {self.slot}")


def queue_matrix(state: NetworkState) -> np.ndarray:
    """Copy of U(t): entry [i, c] is the backlog of commodity c at node i."""
    return state.queue_lengths.copy()


def poisson_knuth(rng: random.Random, lam: float) -> int:
    """Poisson sample by multiplying uniforms until the product drops below e^-lam."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0.0:
        return 0
    limit = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def sample_arrivals(
    flows: Iterable[TrafficFlow], slot: int, rng: random.Random, next_id: int = 0
) -> List[Tuple[NodeId, Packet]]:
    """Draw this slot's exogenous packets, one Poisson count per flow.

    Flows are consumed in list order from the single run RNG, so results are
    reproducible for a fixed (flows, seed) pair.  Packet ids count up from
    ``next_id`` in drawing order.
    """
    out: List[Tuple[NodeId, Packet]] = []
    pid = next_id
    for flow in flows:
        count = poisson_knuth(rng, flow.rate)
        for _ in range(count):
            out.append((flow.source, Packet(pid, flow.destination, slot)))
            pid += 1
    return out


def enqueue(state: NetworkState, node: NodeId, packet: Packet) -> Optional[Packet]:
    """Admit a packet into the network at ``node`` during the current slot.

    Returns the packet if ``node`` is already its destination (delivered
    instantly, never queued), else None after appending to the FIFO.
    """
    if not (0 <= node < state.n_nodes and 0 <= packet.commodity < state.n_nodes):
        raise ValueError("node or commodity out of range")
    state.created_count += 1
    if node == packet.commodity:
        state.delivered_count += 1
        return packet
    packet.entered_slot = state.slot
    state.queues[node][packet.commodity].append(packet)
    state.queue_lengths[node, packet.commodity] += 1
    return None


def apply_transmissions(state, decisions) -> List[Packet]:
    """Move packets according to this slot's transmission decisions.

    Each decision offers ``offered_rate`` transmissions of one commodity on
    one link; the head of the FIFO moves, up to the backlog actually there.
    A packet relayed to a non-destination node joins that node's queue and
    becomes transmittable next slot.  Packets whose link ends at their
    destination are delivered and returned.

    At most one decision per link is accepted; duplicates raise ValueError.
    """
    seen_links: set[tuple[int, int]] = set()
    staged: List[Tuple[NodeId, Packet]] = []
    delivered: List[Packet] = []
    for dec in sorted(decisions, key=lambda d: d.link):
        i, j = dec.link
        if dec.link in seen_links:
            raise ValueError(f"duplicate decision for link ({i}, {j})")
        seen_links.add(dec.link)
        c = dec.commodity
        q = state.queues[i][c]
        n_move = min(int(dec.offered_rate), len(q))
        if n_move <= 0:
            continue
        for _ in range(n_move):
            pkt = q.popleft()
            if pkt.entered_slot >= state.slot:
                raise RuntimeError(
                    f"packet {pkt.id} moved in the slot it arrived (slot {state.slot})"
                )
            if j == c:
                delivered.append(pkt)
            else:
                staged.append((j, pkt))
        state.queue_lengths[i, c] -= n_move
    # Relays land after every send drew from pre-slot backlogs.
    for j, pkt in staged:
        pkt.entered_slot = state.slot
        state.queues[j][pkt.commodity].append(pkt)
        state.queue_lengths[j, pkt.commodity] += 1
    state.delivered_count += len(delivered)
    return delivered
