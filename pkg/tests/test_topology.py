from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from bpsim.topology import (
    UNREACHABLE,
    Topology,
    all_pairs_hops,
    build_grid,
    load_edge_file,
    neighbors,
)


class TestBuildGrid:
    def test_8x8_counts(self):
        topo = build_grid(8, 8, capacity=1.0)
        assert topo.n_nodes == 64
        # 2 * (8*7 + 7*8) directed links
        assert topo.n_links == 224
        assert all(cap == 1.0 for cap in topo.capacities)

    def test_label_mapping(self):
        topo = build_grid(8, 8)
        assert topo.node_of_label(1, 1) == 0
        assert topo.node_of_label(1, 3) == 2
        assert topo.node_of_label(2, 5) == 12
        assert topo.node_of_label(8, 8) == 63
        with pytest.raises(ValueError):
            topo.node_of_label(9, 1)

    def test_links_are_bidirectional(self):
        topo = build_grid(3, 4)
        for i, j in topo.links:
            assert topo.has_link(j, i)

    def test_neighbors_ascending(self):
        topo = build_grid(8, 8)
        assert neighbors(topo, 0) == [1, 8]
        assert neighbors(topo, 9) == [1, 8, 10, 17]
        assert neighbors(topo, 63) == [55, 62]
        for v in range(topo.n_nodes):
            ns = neighbors(topo, v)
            assert ns == sorted(ns)

    def test_single_node_grid(self):
        topo = build_grid(1, 1)
        assert topo.n_nodes == 1
        assert topo.n_links == 0

    def test_bad_dimensions(self):
        with pytest.raises(ValueError):
            build_grid(0, 3)

    def test_neighbors_rejects_bad_id(self):
        topo = build_grid(2, 2)
        with pytest.raises(ValueError):
            neighbors(topo, 4)
        with pytest.raises(ValueError):
            neighbors(topo, -1)


class TestTopologyValidation:
    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            Topology(2, ((0, 0),), (1.0,))

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            Topology(2, ((0, 1), (0, 1)), (1.0, 1.0))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            Topology(2, ((0, 2),), (1.0,))

    def test_negative_capacity_rejected(self):
        with pytest.raises(ValueError, match="capacity"):
            Topology(2, ((0, 1),), (-1.0,))

    def test_unsorted_links_rejected(self):
        with pytest.raises(ValueError, match="sorted"):
            Topology(3, ((1, 0), (0, 1)), (1.0, 1.0))

    def test_immutable(self):
        topo = build_grid(2, 2)
        with pytest.raises(dataclasses.FrozenInstanceError):
            topo.n_nodes = 5


class TestEdgeFile:
    def test_roundtrip_directed(self, tmp_path):
        p = tmp_path / "net.txt"
        p.write_text(
            """
            # three nodes in a directed line
            3
            0 1 1.0
            1 2 2.5
            """
        )
        topo = load_edge_file(p)
        assert topo.n_nodes == 3
        assert topo.links == ((0, 1), (1, 2))
        assert topo.capacity(1, 2) == 2.5
        assert not topo.has_link(1, 0)

    def test_missing_header(self, tmp_path):
        p = tmp_path / "net.txt"
        p.write_text("x y z\n")
        with pytest.raises(ValueError, match="node count"):
            load_edge_file(p)

    def test_malformed_line(self, tmp_path):
        p = tmp_path / "net.txt"
        p.write_text("2\n0 1\n")
        with pytest.raises(ValueError, match="i j capacity"):
            load_edge_file(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "net.txt"
        p.write_text("# nothing\n")
        with pytest.raises(ValueError, match="empty"):
            load_edge_file(p)


class TestAllPairsHops:
    def test_grid_is_manhattan(self):
        rows, cols = 5, 7
        topo = build_grid(rows, cols)
        hops = all_pairs_hops(topo)
        for r1 in range(rows):
            for c1 in range(cols):
                for r2 in range(rows):
                    for c2 in range(cols):
                        i = r1 * cols + c1
                        j = r2 * cols + c2
                        assert hops[i, j] == abs(r1 - r2) + abs(c1 - c2)

    def test_directed_line_unreachable(self, tmp_path):
        p = tmp_path / "net.txt"
        p.write_text("3\n0 1 1\n1 2 1\n")
        hops = all_pairs_hops(load_edge_file(p))
        assert hops[0, 2] == 2
        assert hops[2, 0] == UNREACHABLE
        assert hops[1, 0] == UNREACHABLE

    def test_diagonal_zero(self):
        hops = all_pairs_hops(build_grid(3, 3))
        assert np.diagonal(hops).sum() == 0

    def test_disconnected_pairs(self, tmp_path):
        p = tmp_path / "net.txt"
        p.write_text("4\n0 1 1\n1 0 1\n2 3 1\n3 2 1\n")
        hops = all_pairs_hops(load_edge_file(p))
        assert hops[0, 1] == 1
        assert hops[0, 2] == UNREACHABLE
        assert hops[3, 1] == UNREACHABLE
