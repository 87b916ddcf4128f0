"""Trace engine tests: schemas, the seeded sampler, executor correctness
against independent references, and pointer reversal."""

from __future__ import annotations

import numpy as np
import networkx as nx
import pytest

from hintrelic import features as F
from hintrelic.executors import execute, step_bound
from hintrelic.instances import (
    make_array_instance,
    make_graph_instance,
    sample_instance,
    validate_instance,
)
from hintrelic.trajectories import (
    reverse_pointer_matrix,
    reverse_pointers,
    reversal_specs,
    trajectories_equal,
)

import reference as ref


def _sorting_oracle_order(keys) -> list[int]:
    """Comparison-sort oracle: selection sort over indices, written
    independently of the package."""
    idx = list(range(len(keys)))
    out = []
    while idx:
        best = idx[0]
        for x in idx[1:]:
            if keys[x] < keys[best]:
                best = x
        idx.remove(best)
        out.append(best)
    return out


class TestSchemas:
    def test_all_algorithms_have_schemas(self):
        assert len(F.ALGORITHMS) == 18
        for alg in F.ALGORITHMS:
            specs = F.schema(alg)
            assert any(s.stage is F.Stage.INPUT for s in specs)
            assert any(s.stage is F.Stage.HINT for s in specs)
            assert any(s.stage is F.Stage.OUTPUT for s in specs)

    def test_schema_stable_across_calls(self):
        assert F.schema("bfs") is F.schema("bfs")

    def test_names_unique_within_schema(self):
        for alg in F.ALGORITHMS:
            names = [s.name for s in F.schema(alg)]
            assert len(names) == len(set(names)), alg

    def test_expected_feature_kinds(self):
        assert F.feature("bubble_sort", "pred_h").kind is F.Kind.POINTER
        assert F.feature("heapsort", "parent").kind is F.Kind.POINTER
        assert F.feature("bfs", "pi_h").kind is F.Kind.POINTER
        assert F.feature("scc", "color").num_classes == 3
        assert F.feature("floyd_warshall", "Pi_h").location is F.Location.EDGE
        assert F.feature("binary_search", "target").location is F.Location.GRAPH

    def test_contrasted_hints_exist_in_schema(self):
        for alg in F.ALGORITHMS:
            hint_names = {s.name for s in F.stage_features(alg, F.Stage.HINT)}
            for spec in F.contrasted_hints(alg):
                assert spec.name in hint_names
                assert spec.stage is F.Stage.HINT

    def test_contrasted_hint_catalogue(self):
        assert F.CONTRASTED_HINTS["scc"] == ("scc_id_h", "color", "s_prev")
        assert F.CONTRASTED_HINTS["topological_sort"] == ("topo_h", "color", "s_prev")
        assert F.CONTRASTED_HINTS["dag_shortest_paths"] == ("pi_h", "topo_h", "color")
        assert F.CONTRASTED_HINTS["heapsort"] == ("pred_h", "parent")
        assert F.CONTRASTED_HINTS["mst_kruskal"] == ("pi",)
        assert F.CONTRASTED_HINTS["dfs"] == ()


class TestSampler:
    def test_deterministic(self):
        a = sample_instance("bfs", 8, 5)
        b = sample_instance("bfs", 8, 5)
        for name in a.node_inputs:
            np.testing.assert_array_equal(a.node_inputs[name], b.node_inputs[name])
        for name in a.edge_inputs:
            np.testing.assert_array_equal(a.edge_inputs[name], b.edge_inputs[name])

    def test_different_seeds_differ(self):
        a = sample_instance("bfs", 8, 5)
        b = sample_instance("bfs", 8, 6)
        assert not np.array_equal(a.edge_inputs["adj"], b.edge_inputs["adj"])

    def test_positions(self):
        inst = sample_instance("minimum", 5, 1)
        np.testing.assert_array_equal(inst.node_inputs["pos"], np.arange(5) / 5.0)

    def test_dijkstra_weights_symmetric_unit_interval(self):
        inst = sample_instance("dijkstra", 10, 2)
        adj, w = inst.edge_inputs["adj"], inst.edge_inputs["A"]
        np.testing.assert_array_equal(adj, adj.T)
        np.testing.assert_array_equal(w, w.T)
        assert np.all(np.diag(adj) == 0)
        assert w.min() >= 0.0 and w.max() < 1.0
        assert np.all((w > 0) == (adj == 1))

    def test_edge_weights_distinct(self):
        inst = sample_instance("mst_kruskal", 12, 9)
        adj, w = inst.edge_inputs["adj"], inst.edge_inputs["A"]
        vals = w[np.triu(adj, k=1) == 1]
        assert np.unique(vals).size == vals.size

    def test_dag_sampler_acyclic(self):
        for seed in range(20):
            inst = sample_instance("topological_sort", 10, seed)
            g = nx.from_numpy_array(inst.edge_inputs["adj"], create_using=nx.DiGraph)
            assert nx.is_directed_acyclic_graph(g)

    def test_binary_search_sorted_and_target_not_a_key(self):
        inst = sample_instance("binary_search", 16, 4)
        keys = inst.node_inputs["key"]
        assert np.all(np.diff(keys) > 0)
        assert float(inst.graph_inputs["target"]) not in set(keys.tolist())

    def test_keys_distinct(self):
        inst = sample_instance("bubble_sort", 32, 7)
        assert np.unique(inst.node_inputs["key"]).size == 32

    def test_single_node_minimum(self):
        inst = sample_instance("minimum", 1, 3)
        assert inst.n == 1
        assert inst.node_inputs["key"].shape == (1,)

    def test_graph_needs_two_nodes(self):
        with pytest.raises(ValueError):
            sample_instance("bfs", 1, 0)

    def test_malformed_instance_rejected(self):
        inst = sample_instance("bfs", 4, 0)
        inst.node_inputs["pos"] = inst.node_inputs["pos"][:2]
        with pytest.raises(ValueError):
            validate_instance(inst)

    def test_nan_rejected(self):
        inst = sample_instance("dijkstra", 4, 0)
        inst.edge_inputs["A"] = inst.edge_inputs["A"].copy()
        inst.edge_inputs["A"][0, 1] = np.nan
        with pytest.raises(ValueError):
            validate_instance(inst)


class TestExecutionBasics:
    def test_deterministic_repeat(self):
        for alg in F.ALGORITHMS:
            n = 1 if alg == "minimum" else 7
            t1 = execute(sample_instance(alg, n, 13), seed=13)
            t2 = execute(sample_instance(alg, n, 13), seed=13)
            assert trajectories_equal(t1, t2), alg

    def test_step_bounds_hold(self):
        for alg in F.ALGORITHMS:
            for seed in range(10):
                for n in (2, 5, 8):
                    traj = execute(sample_instance(alg, n, seed))
                    assert 1 <= traj.num_steps <= step_bound(alg, n), alg

    def test_single_item_traces(self):
        for alg in ("minimum", "insertion_sort", "bubble_sort", "quicksort", "heapsort"):
            traj = execute(make_array_instance(alg, [0.5]))
            assert traj.num_steps == 1

    def test_hint_frames_match_schema(self):
        traj = execute(sample_instance("heapsort", 6, 0))
        hint_names = {s.name for s in F.stage_features("heapsort", F.Stage.HINT)}
        for frame in traj.frames:
            assert set(frame.values) == hint_names


class TestSortingExecutors:
    def test_bubble_first_frame_compares_first_pair(self):
        traj = execute(make_array_instance("bubble_sort", [2.0, 1.0, 3.0]))
        first = traj.frames[0].values
        np.testing.assert_array_equal(first["i"], [1, 0, 0])
        np.testing.assert_array_equal(first["j"], [0, 1, 0])
        # order after the swap is [1, 0, 2]
        np.testing.assert_array_equal(first["pred_h"], [1, 1, 0])

    @pytest.mark.parametrize("alg", ["insertion_sort", "bubble_sort", "quicksort", "heapsort"])
    def test_sorted_chain_matches_comparison_oracle(self, alg):
        for seed in range(125):
            n = 2 + seed % 14
            inst = sample_instance(alg, n, seed)
            traj = execute(inst)
            order = ref.chain_to_order(traj.outputs["pred"])
            assert order == _sorting_oracle_order(inst.node_inputs["key"].tolist())

    @pytest.mark.parametrize("alg", ["insertion_sort", "bubble_sort", "quicksort", "heapsort"])
    def test_hint_chains_always_valid(self, alg):
        inst = sample_instance(alg, 9, 77)
        traj = execute(inst)
        for frame in traj.frames:
            ref.chain_to_order(frame.values["pred_h"])  # raises if broken

    def test_heapsort_parent_pointers_shape_heap(self):
        inst = sample_instance("heapsort", 8, 5)
        traj = execute(inst)
        for frame in traj.frames:
            parent, in_heap = frame.values["parent"], frame.values["in_heap"]
            order = ref.chain_to_order(frame.values["pred_h"])
            heap_nodes = [x for x in order if in_heap[x]]
            assert heap_nodes == order[: len(heap_nodes)]
            for pos, node in enumerate(heap_nodes):
                expected = node if pos == 0 else heap_nodes[(pos - 1) // 2]
                assert parent[node] == expected
            for node in order[len(heap_nodes):]:
                assert parent[node] == node


class TestSearchExecutors:
    def test_minimum_output(self):
        for seed in range(200):
            n = 1 + seed % 12
            inst = sample_instance("minimum", n, seed)
            traj = execute(inst)
            assert int(np.argmax(traj.outputs["min"])) == int(np.argmin(inst.node_inputs["key"]))

    def test_binary_search_output(self):
        for seed in range(200):
            n = 1 + seed % 16
            inst = sample_instance("binary_search", n, seed)
            traj = execute(inst)
            keys = inst.node_inputs["key"]
            target = float(inst.graph_inputs["target"])
            want = int(np.searchsorted(keys, target, side="right")) - 1
            assert int(np.argmax(traj.outputs["return"])) == max(want, 0)

    def test_binary_search_probe_count(self):
        traj = execute(sample_instance("binary_search", 16, 0))
        assert traj.num_steps == 4


class TestPathExecutors:
    def test_bfs_edgeless_parents_are_self(self):
        inst = make_graph_instance("bfs", np.zeros((3, 3), dtype=np.int64), source=0)
        traj = execute(inst)
        np.testing.assert_array_equal(traj.outputs["pi"], [0, 1, 2])
        assert traj.num_steps == 1

    def test_bfs_parents_give_hop_distances(self):
        for seed in range(100):
            inst = sample_instance("bfs", 4 + seed % 12, seed)
            traj = execute(inst)
            adj = inst.edge_inputs["adj"]
            src = int(np.argmax(inst.node_inputs["s"]))
            dist = ref.ref_hop_distances(adj, src)
            pi = traj.outputs["pi"]
            for v in range(inst.n):
                if dist[v] == ref.INF:
                    assert pi[v] == v
                else:
                    path = ref.implied_path(pi, src, v, inst.n)
                    assert path is not None
                    assert ref.path_cost(path, None) == dist[v]
                    for a, b in zip(path, path[1:]):
                        assert adj[a, b] == 1

    @pytest.mark.parametrize("alg", ["bellman_ford", "dijkstra", "dag_shortest_paths"])
    def test_single_source_distances_exact(self, alg):
        for seed in range(125):
            inst = sample_instance(alg, 4 + seed % 12, seed)
            traj = execute(inst)
            adj, w = inst.edge_inputs["adj"], inst.edge_inputs["A"]
            src = int(np.argmax(inst.node_inputs["s"]))
            dist = ref.ref_weighted_distances(adj, w, src)
            pi = traj.outputs["pi"]
            for v in range(inst.n):
                if dist[v] == ref.INF:
                    assert pi[v] == v
                else:
                    path = ref.implied_path(pi, src, v, inst.n)
                    assert path is not None
                    assert ref.path_cost(path, w) == dist[v]
                    for a, b in zip(path, path[1:]):
                        assert adj[a, b] == 1

    def test_all_pairs_distances_exact(self):
        for seed in range(125):
            inst = sample_instance("floyd_warshall", 4 + seed % 9, seed)
            traj = execute(inst)
            adj, w = inst.edge_inputs["adj"], inst.edge_inputs["A"]
            Pi = traj.outputs["Pi"]
            for i in range(inst.n):
                dist = ref.ref_weighted_distances(adj, w, i)
                for j in range(inst.n):
                    if dist[j] == ref.INF:
                        assert Pi[i, j] == j
                    elif i != j:
                        path = ref.implied_path(Pi[i], i, j, inst.n)
                        assert path is not None
                        assert ref.path_cost(path, w) == dist[j]


class TestTreeAndComponentExecutors:
    def test_kruskal_matches_unique_mst(self):
        for seed in range(60):
            inst = sample_instance("mst_kruskal", 4 + seed % 10, seed)
            traj = execute(inst)
            g = nx.Graph()
            g.add_nodes_from(range(inst.n))
            adj, w = inst.edge_inputs["adj"], inst.edge_inputs["A"]
            for a in range(inst.n):
                for b in range(a + 1, inst.n):
                    if adj[a, b]:
                        g.add_edge(a, b, weight=float(w[a, b]))
            want = {frozenset(e) for e in nx.minimum_spanning_edges(g, data=False)}
            got = {
                frozenset((a, b))
                for a in range(inst.n)
                for b in range(a + 1, inst.n)
                if traj.outputs["in_mst"][a, b]
            }
            assert got == want

    def test_prim_matches_unique_mst_on_source_component(self):
        for seed in range(60):
            inst = sample_instance("mst_prim", 4 + seed % 10, seed)
            traj = execute(inst)
            adj, w = inst.edge_inputs["adj"], inst.edge_inputs["A"]
            src = int(np.argmax(inst.node_inputs["s"]))
            comp = {v for v in range(inst.n) if ref.ref_hop_distances(adj, src)[v] != ref.INF}
            g = nx.Graph()
            g.add_nodes_from(comp)
            for a in comp:
                for b in comp:
                    if a < b and adj[a, b]:
                        g.add_edge(a, b, weight=float(w[a, b]))
            want = {frozenset(e) for e in nx.minimum_spanning_edges(g, data=False)}
            pi = traj.outputs["pi"]
            got = {frozenset((int(pi[v]), v)) for v in comp if v != src}
            assert got == want
            for v in range(inst.n):
                if v not in comp:
                    assert pi[v] == v

    def test_scc_partition_matches(self):
        for seed in range(60):
            inst = sample_instance("scc", 4 + seed % 10, seed)
            traj = execute(inst)
            g = nx.from_numpy_array(inst.edge_inputs["adj"], create_using=nx.DiGraph)
            want = {frozenset(c) for c in nx.strongly_connected_components(g)}
            ids = traj.outputs["scc_id"]
            got = {frozenset(np.flatnonzero(ids == r).tolist()) for r in set(ids.tolist())}
            assert got == want

    def test_articulation_points_match(self):
        for seed in range(60):
            inst = sample_instance("articulation_points", 4 + seed % 10, seed)
            traj = execute(inst)
            g = nx.from_numpy_array(inst.edge_inputs["adj"])
            want = set(nx.articulation_points(g))
            got = set(np.flatnonzero(traj.outputs["is_cut"]).tolist())
            assert got == want

    def test_bridges_match(self):
        for seed in range(60):
            inst = sample_instance("bridges", 4 + seed % 10, seed)
            traj = execute(inst)
            g = nx.from_numpy_array(inst.edge_inputs["adj"])
            want = {frozenset(e) for e in nx.bridges(g)}
            out = traj.outputs["is_bridge"]
            np.testing.assert_array_equal(out, out.T)
            got = {
                frozenset((a, b))
                for a in range(inst.n)
                for b in range(a + 1, inst.n)
                if out[a, b]
            }
            assert got == want

    def test_topological_order_valid(self):
        for seed in range(60):
            inst = sample_instance("topological_sort", 4 + seed % 10, seed)
            traj = execute(inst)
            head = int(np.argmax(traj.outputs["topo_head"]))
            succ = traj.outputs["topo"]
            order = [head]
            while succ[order[-1]] != order[-1]:
                order.append(int(succ[order[-1]]))
            assert sorted(order) == list(range(inst.n))
            rank = {v: k for k, v in enumerate(order)}
            adj = inst.edge_inputs["adj"]
            for a in range(inst.n):
                for b in range(inst.n):
                    if adj[a, b]:
                        assert rank[a] < rank[b]

    def test_dfs_parents_are_edges(self):
        for seed in range(60):
            inst = sample_instance("dfs", 4 + seed % 10, seed)
            traj = execute(inst)
            pi = traj.outputs["pi"]
            adj = inst.edge_inputs["adj"]
            for v in range(inst.n):
                if pi[v] != v:
                    assert adj[pi[v], v] == 1


class TestDfsFrameConventions:
    def test_two_frames_per_node(self):
        for alg in ("dfs", "articulation_points", "bridges", "topological_sort"):
            inst = sample_instance(alg, 7, 3)
            assert execute(inst).num_steps == 14

    def test_scc_four_frames_per_node_and_phase_flip(self):
        inst = sample_instance("scc", 6, 3)
        traj = execute(inst)
        assert traj.num_steps == 24
        phases = [int(f.values["phase"]) for f in traj.frames]
        assert phases == [0] * 12 + [1] * 12

    def test_first_discovery_is_node_zero(self):
        inst = sample_instance("dfs", 6, 9)
        traj = execute(inst)
        first = traj.frames[0].values
        assert first["color"][0] == 1
        assert int(np.argmax(first["u"])) == 0


class TestPointerReversal:
    def test_reversed_matrix_example(self):
        rev = reverse_pointer_matrix(np.array([0, 0, 1]))
        want = np.zeros((3, 3), dtype=np.int64)
        want[0, 0] = want[0, 1] = want[1, 2] = 1
        np.testing.assert_array_equal(rev, want)

    def test_reversal_involution_per_frame(self):
        traj = reverse_pointers(execute(sample_instance("bubble_sort", 6, 1)))
        for frame in traj.frames:
            rev = frame.values["rev_pred_h"]
            p = frame.values["pred_h"]
            # each column has exactly one mark, at the pointed-to row
            np.testing.assert_array_equal(rev.sum(axis=0), np.ones(6, dtype=np.int64))
            for a in range(6):
                assert rev[p[a], a] == 1

    def test_original_hints_untouched(self):
        base = execute(sample_instance("bfs", 6, 1))
        rev = reverse_pointers(base)
        for fb, fr in zip(base.frames, rev.frames):
            np.testing.assert_array_equal(fb.values["pi_h"], fr.values["pi_h"])

    def test_no_pointer_hints_warns_identity(self):
        # the all-pairs algorithm has no node-level pointer hints
        traj = execute(sample_instance("floyd_warshall", 4, 0))
        with pytest.warns(UserWarning):
            out = reverse_pointers(traj)
        assert out is traj

    def test_reversal_specs(self):
        names = [s.name for s in reversal_specs("heapsort")]
        assert names == ["rev_pred_h", "rev_parent"]
        assert all(s.kind is F.Kind.MASK for s in reversal_specs("heapsort"))
