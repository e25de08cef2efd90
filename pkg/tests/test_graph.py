from __future__ import annotations

import numpy as np
import pytest

from vg2s.graph import (adjacency_matrices, build_edges, build_graph,
                        reconstruction_targets, static_features)
from vg2s.instance import Instance


class TestStaticFeatures:
    def test_two_by_two_hand_values(self, two_by_two):
        x = static_features(two_by_two)
        # op (M1, J1): p=3, job total 5, machine-0 total 7, first op of job 1
        np.testing.assert_allclose(x[0], [3 / 5, 1.0, 3 / 7, 3 / 5, 1 / 2, 5 / 6])

    def test_single_op_instance_all_ones(self):
        inst = Instance(n=1, m=1, ops=(((0, 5),),))
        x = static_features(inst)
        np.testing.assert_allclose(x[0], np.ones(6))

    def test_dummy_rows(self, two_by_two):
        x = static_features(two_by_two)
        np.testing.assert_allclose(x[4], np.zeros(6))  # source
        np.testing.assert_allclose(x[5], [0, 0, 1, 1, 1, 0])  # sink

    def test_equal_duration_symmetry(self):
        inst = Instance(n=1, m=3, ops=(((0, 4), (1, 4), (2, 4)),))
        x = static_features(inst)
        for k in range(3):
            assert x[k, 0] == pytest.approx(1 / 3)
            assert x[k, 1] == 1.0
            assert x[k, 3] == pytest.approx((k + 1) / 3)
            assert x[k, 4] == pytest.approx((k + 1) / 3)

    def test_range_and_row_sums(self, ft06):
        x = static_features(ft06)
        assert np.all(x >= 0.0) and np.all(x <= 1.0)
        for j in range(ft06.n):
            rows = x[j * ft06.m:(j + 1) * ft06.m]
            assert rows[:, 0].sum() == pytest.approx(1.0, abs=1e-12)
            assert rows[:, 1].max() == 1.0  # the job's longest op
            assert np.all(np.diff(rows[:, 3]) > 0)  # strictly increasing
            assert np.all(np.diff(rows[:, 4]) > 0)


class TestEdges:
    def test_single_op(self):
        inst = Instance(n=1, m=1, ops=(((0, 5),),))
        prec, succ, share = build_edges(inst)
        assert prec[0] == (1,)   # source
        assert succ[0] == (2,)   # sink
        assert share[0] == (0,)  # self-loop, no sharing partner

    def test_chain_and_boundary(self, two_by_two):
        prec, succ, share = build_edges(two_by_two)
        assert prec[0] == (4,) and prec[1] == (0,)
        assert succ[0] == (1,) and succ[1] == (5,)
        # machine 0 hosts ops 0 and 3; machine 1 hosts 1 and 2
        assert share[0] == (3,) and share[3] == (0,)
        assert share[1] == (2,) and share[2] == (1,)

    def test_sharing_symmetry(self, ft06):
        _, _, share = build_edges(ft06)
        for u in range(ft06.num_ops):
            for v in share[u]:
                assert u in share[v]

    def test_ft06_sharing_count(self, ft06):
        _, _, share = build_edges(ft06)
        total = sum(len(share[u]) for u in range(ft06.num_ops))
        assert total == 6 * 6 * 5  # m * n * (n - 1) = 180

    def test_dummies_self_looped(self, two_by_two):
        prec, succ, share = build_edges(two_by_two)
        for d in (4, 5):
            assert prec[d] == succ[d] == share[d] == (d,)


class TestGraph:
    def test_node_count(self, ft06):
        graph = build_graph(ft06)
        assert graph.node_count == 38
        assert graph.source_id == 36 and graph.sink_id == 37

    def test_adjacency_shapes(self, two_by_two):
        adj = adjacency_matrices(build_graph(two_by_two))
        assert adj.shape == (3, 6, 6)
        # every real node has exactly one predecessor and one successor
        assert np.all(adj[0, :4].sum(axis=1) == 1)
        assert np.all(adj[1, :4].sum(axis=1) == 1)

    def test_reconstruction_targets_round_trip(self, two_by_two):
        graph = build_graph(two_by_two)
        node_t, edge_t = reconstruction_targets(graph, canvas=9)
        np.testing.assert_allclose(node_t[:4], graph.features[:4])
        assert np.all(node_t[4:] == 0)
        adj = adjacency_matrices(graph)
        for e in range(3):
            np.testing.assert_array_equal(edge_t[:4, :4, e], adj[e, :4, :4])
        assert np.all(edge_t[4:] == 0) and np.all(edge_t[:, 4:] == 0)

    def test_canvas_too_small(self, ft06):
        graph = build_graph(ft06)
        with pytest.raises(ValueError, match="canvas"):
            reconstruction_targets(graph, canvas=35)
