"""Max-weight commodity selection and rate allocation for independent links.

All links can transmit simultaneously (no interference sets), so allocation
decomposes per link: pick the commodity with the largest bias-augmented
backlog differential, send at full capacity if that differential is positive,
stay silent otherwise.  Ties break toward the smallest commodity id.
"""

from __future__ import annotations

from typing import List, NamedTuple, Tuple

import numpy as np

from .topology import Link, Topology


class TransmissionDecision(NamedTuple):
    link: Link
    commodity: int
    weight: float
    offered_rate: float


def optimal_commodity(
    link: Link, queue_lengths: np.ndarray, bias: np.ndarray
) -> Tuple[int, float]:
    """Best commodity and its weight for one link.

    The weight is max over c of (U_i[c] + B_i[c]) - (U_j[c] + B_j[c]),
    clamped at zero.  The reported commodity attains the unclamped maximum,
    smallest id first on ties, even when the weight clamps to zero.
    """
    i, j = link
    diff = (queue_lengths[i] + bias[i]) - (queue_lengths[j] + bias[j])
    c = int(np.argmax(diff))
    return c, float(max(diff[c], 0.0))


def decision_arrays(
    topo: Topology, queue_lengths: np.ndarray, bias: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized allocation core: (link index, commodity, weight) columns for
    every link whose best weight is positive, in link order."""
    pressure = queue_lengths + bias
    diff = pressure[topo.link_src] - pressure[topo.link_dst]
    best = np.argmax(diff, axis=1)  # first max == smallest commodity id
    weights = np.take_along_axis(diff, best[:, None], axis=1)[:, 0]
    active = np.flatnonzero(weights > 0.0)
    return active, best[active], weights[active]


def allocate_independent(
    topo: Topology, queue_lengths: np.ndarray, bias: np.ndarray
) -> List[TransmissionDecision]:
    """One decision per link with positive weight, offered at link capacity.

    Pure function of (topology, U, B); zero-weight links transmit nothing and
    are omitted.  Decisions come out sorted by link.
    """
    idx, commodities, weights = decision_arrays(topo, queue_lengths, bias)
    caps = topo.link_capacity
    links = topo.links
    return [
        TransmissionDecision(links[li], c, w, caps[li])
        for li, c, w in zip(idx.tolist(), commodities.tolist(), weights.tolist())
    ]
