"""Heterogeneous-graph view of an instance: static node features and the
precedence / successor / machine-sharing edge sets, with source/sink dummies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import Instance


@dataclass(frozen=True)
class HeteroGraph:
    """Operation graph with N_O = n*m + 2 nodes.

    Node u = j*m + k is the k-th operation of job j; the last two nodes are
    the source and sink dummies.  features is N_O x 6 with all entries in
    [0, 1].  Each edge set maps node -> tuple of neighbor nodes; every
    neighborhood is nonempty (self-loops fill gaps) so attention softmaxes
    are always well defined.
    """

    instance: Instance
    features: np.ndarray
    edges_prec: tuple[tuple[int, ...], ...]
    edges_succ: tuple[tuple[int, ...], ...]
    edges_share: tuple[tuple[int, ...], ...]
    source_id: int
    sink_id: int

    @property
    def node_count(self) -> int:
        return self.instance.num_ops + 2

    def op_node(self, j: int, k: int) -> int:
        return j * self.instance.m + k

    def node_op(self, u: int) -> tuple[int, int]:
        return divmod(u, self.instance.m)


def static_features(inst: Instance) -> np.ndarray:
    """Six normalized per-operation features plus the two dummy rows.

    For operation k of job j on machine i with duration p:
      f1: p / (job total)
      f2: p / (max duration within the job)
      f3: p / (machine total)
      f4: (work of the job's ops 1..k) / (job total)
      f5: (machines visited by the job up to and including k) / m
      f6: (job total) / (max job total)
    Source row is all zeros; sink row is (0, 0, 1, 1, 1, 0).
    """
    n, m = inst.n, inst.m
    job_totals = np.array([inst.job_total(j) for j in range(n)], dtype=np.float64)
    mach_totals = np.array([inst.machine_total(i) for i in range(m)], dtype=np.float64)
    max_job_total = job_totals.max()

    x = np.zeros((n * m + 2, 6), dtype=np.float64)
    for j in range(n):
        durs = np.array([p for _, p in inst.ops[j]], dtype=np.float64)
        prefix = np.cumsum(durs)
        for k in range(m):
            mi, p = inst.ops[j][k]
            u = j * m + k
            x[u, 0] = p / job_totals[j]
            x[u, 1] = p / durs.max()
            x[u, 2] = p / mach_totals[mi]
            x[u, 3] = prefix[k] / job_totals[j]
            x[u, 4] = (k + 1) / m
            x[u, 5] = job_totals[j] / max_job_total
    x[n * m + 1] = (0.0, 0.0, 1.0, 1.0, 1.0, 0.0)  # sink; source row stays zero
    return x


def build_edges(inst: Instance):
    """Adjacency lists for the three edge sets over the n*m + 2 node graph.

    Precedence: each op's single predecessor (the source for first ops).
    Successor: each op's single successor (the sink for last ops).
    Machine-sharing: all other real ops on the same machine; a node with no
    sharing partner gets a self-loop instead.  Dummies are self-looped in
    all three sets.
    """
    n, m = inst.n, inst.m
    num = n * m
    source, sink = num, num + 1
    by_machine: dict[int, list[int]] = {i: [] for i in range(m)}
    for j in range(n):
        for k in range(m):
            by_machine[inst.machine(j, k)].append(j * m + k)

    prec: list[tuple[int, ...]] = []
    succ: list[tuple[int, ...]] = []
    share: list[tuple[int, ...]] = []
    for j in range(n):
        for k in range(m):
            u = j * m + k
            prec.append((u - 1,) if k > 0 else (source,))
            succ.append((u + 1,) if k < m - 1 else (sink,))
            peers = tuple(v for v in by_machine[inst.machine(j, k)] if v != u)
            share.append(peers if peers else (u,))
    for d in (source, sink):
        prec.append((d,))
        succ.append((d,))
        share.append((d,))
    return tuple(prec), tuple(succ), tuple(share)


def build_graph(inst: Instance) -> HeteroGraph:
    e1, e2, e3 = build_edges(inst)
    return HeteroGraph(
        instance=inst,
        features=static_features(inst),
        edges_prec=e1,
        edges_succ=e2,
        edges_share=e3,
        source_id=inst.num_ops,
        sink_id=inst.num_ops + 1,
    )


def adjacency_matrices(graph: HeteroGraph) -> np.ndarray:
    """Stack of three boolean N_O x N_O adjacency matrices (prec, succ, share)."""
    n_nodes = graph.node_count
    adj = np.zeros((3, n_nodes, n_nodes), dtype=bool)
    for e, edges in enumerate((graph.edges_prec, graph.edges_succ, graph.edges_share)):
        for u, nbrs in enumerate(edges):
            for v in nbrs:
                adj[e, u, v] = True
    return adj


def reconstruction_targets(graph: HeteroGraph, canvas: int):
    """Zero-padded targets for the generative head: node features
    (canvas x 6) and the three real-node adjacency matrices
    (canvas x canvas x 3).  Dummy nodes and their edges are excluded."""
    num = graph.instance.num_ops
    if num > canvas:
        raise ValueError(f"instance has {num} operations, canvas holds {canvas}")
    node_t = np.zeros((canvas, 6), dtype=np.float64)
    node_t[:num] = graph.features[:num]
    edge_t = np.zeros((canvas, canvas, 3), dtype=np.float64)
    for e, edges in enumerate((graph.edges_prec, graph.edges_succ, graph.edges_share)):
        for u in range(num):
            for v in edges[u]:
                if v < num:
                    edge_t[u, v, e] = 1.0
    return node_t, edge_t
