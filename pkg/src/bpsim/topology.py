"""Static network topology: directed links with capacities, grids, hop counts.

A topology is immutable once built.  Hop-count matrices use ``inf`` for
unreachable pairs so callers can distinguish "far" from "disconnected".
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

NodeId = int
Link = tuple[int, int]

#: Sentinel for unreachable node pairs in hop matrices.
UNREACHABLE = np.inf


@dataclass(frozen=True)
class Topology:
    """Directed graph with per-link capacities (packets per slot).

    ``links`` is sorted by (src, dst) and free of self-loops/duplicates;
    constructors enforce this so downstream code can rely on the order.
    """

    n_nodes: int
    links: tuple[Link, ...]
    capacities: tuple[float, ...]
    # 1-based (row, col) label per node when built from a grid, else None.
    grid_labels: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        if self.n_nodes <= 0:
            raise ValueError("topology needs at least one node")
        if len(self.links) != len(self.capacities):
            raise ValueError("links and capacities length mismatch")
        seen: set[Link] = set()
        for (i, j), cap in zip(self.links, self.capacities):
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise ValueError(f"link ({i}, {j}) out of range")
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if (i, j) in seen:
                raise ValueError(f"duplicate link ({i}, {j})")
            seen.add((i, j))
            if not (cap >= 0 and np.isfinite(cap)):
                raise ValueError(f"capacity of link ({i}, {j}) must be finite and >= 0")
        if list(self.links) != sorted(self.links):
            raise ValueError("links must be sorted by (src, dst)")

    @property
    def n_links(self) -> int:
        return len(self.links)

    @cached_property
    def link_src(self) -> np.ndarray:
        return np.array([i for i, _ in self.links], dtype=np.int64)

    @cached_property
    def link_dst(self) -> np.ndarray:
        return np.array([j for _, j in self.links], dtype=np.int64)

    @cached_property
    def link_capacity(self) -> np.ndarray:
        return np.array(self.capacities, dtype=np.float64)

    @cached_property
    def out_offsets(self) -> np.ndarray:
        """Start index of each node's out-link block in the sorted link list.

        Length n_nodes + 1; node i's out-links occupy
        ``links[out_offsets[i]:out_offsets[i + 1]]``.
        """
        counts = np.bincount(self.link_src, minlength=self.n_nodes)
        offsets = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        return offsets

    @cached_property
    def _neighbor_lists(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for i, j in self.links:
            out[i].append(j)
        return tuple(tuple(js) for js in out)  # ascending: links are sorted

    @cached_property
    def _link_index(self) -> dict[Link, int]:
        return {lk: idx for idx, lk in enumerate(self.links)}

    def has_link(self, i: NodeId, j: NodeId) -> bool:
        return (i, j) in self._link_index

    def link_id(self, i: NodeId, j: NodeId) -> int:
        return self._link_index[(i, j)]

    def capacity(self, i: NodeId, j: NodeId) -> float:
        return self.capacities[self._link_index[(i, j)]]

    def node_of_label(self, row: int, col: int) -> NodeId:
        """Map a 1-based (row, col) grid label to a node id."""
        if self.grid_labels is None:
            raise ValueError("topology was not built from a grid")
        try:
            return self.grid_labels.index((row, col))
        except ValueError:
            raise ValueError(f"no grid node labelled ({row}, {col})") from None


def neighbors(topo: Topology, i: NodeId) -> list[NodeId]:
    """Out-neighbors of ``i`` in ascending node-id order."""
    if not (0 <= i < topo.n_nodes):
        raise ValueError(f"node id {i} out of range")
    return list(topo._neighbor_lists[i])


def build_grid(rows: int, cols: int, capacity: float = 1.0) -> Topology:
    """Rectangular grid; every lattice edge becomes two directed links.

    Node (r, c), 1-based, gets id (r - 1) * cols + (c - 1).
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be positive")
    n = rows * cols
    links: list[Link] = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                links.append((u, u + 1))
            if c - 1 >= 0:
                links.append((u, u - 1))
            if r + 1 < rows:
                links.append((u, u + cols))
            if r - 1 >= 0:
                links.append((u, u - cols))
    links.sort()
    labels = tuple((r + 1, c + 1) for r in range(rows) for c in range(cols))
    return Topology(
        n_nodes=n,
        links=tuple(links),
        capacities=tuple(float(capacity) for _ in links),
        grid_labels=labels,
    )


def load_edge_file(path: str | Path) -> Topology:
    """Read a topology from text: first line is the node count, then one
    ``i j capacity`` triple per line.  Blank lines and ``#`` comments allowed.
    Links are directed; list both directions for a bidirectional edge.
    """
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ValueError(f"{path}: empty edge file")
    try:
        n = int(lines[0])
    except ValueError:
        raise ValueError(f"{path}: first non-comment line must be the node count") from None
    entries: list[tuple[Link, float]] = []
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}: expected 'i j capacity', got {line!r}")
        try:
            i, j, cap = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"{path}: malformed edge line {line!r}") from None
        entries.append(((i, j), cap))
    entries.sort(key=lambda e: e[0])
    return Topology(
        n_nodes=n,
        links=tuple(lk for lk, _ in entries),
        capacities=tuple(cap for _, cap in entries),
    )


def all_pairs_hops(topo: Topology) -> np.ndarray:
    """Minimum hop counts between all ordered pairs, BFS per source.

    Returns an (N, N) float array; entry [i, j] is the hop count of the
    shortest directed path i -> j, ``UNREACHABLE`` if none exists.
    """
    n = topo.n_nodes
    dist = np.full((n, n), UNREACHABLE, dtype=np.float64)
    nbrs = topo._neighbor_lists
    for s in range(n):
        dist[s, s] = 0.0
        frontier = deque([s])
        row = dist[s]
        while frontier:
            u = frontier.popleft()
            du = row[u] + 1.0
            for v in nbrs[u]:
                if du < row[v]:
                    row[v] = du
                    frontier.append(v)
    return dist
