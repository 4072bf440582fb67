import itertools

import networkx as nx
import numpy as np
import pytest

from src.logic.cliques import CliqueStore, ConflictGraph, enumerate_maximal_cliques, reconcile, update_with_path
from src.utils.errors import DuplicatePath
from tests.oracles import brute_force_maximal_cliques


def edge_tester(edges):
    pairs = {frozenset(e) for e in edges}
    return lambda a, b: frozenset((a, b)) in pairs


def insert_all(store, order, edges):
    tester = edge_tester(edges)
    return [update_with_path(store, node, tester) for node in order]


def random_graph(seed, n, p):
    rng = np.random.default_rng(seed)
    nodes = [f"a{i}" for i in range(n)]
    edges = [(a, b) for a, b in itertools.combinations(nodes, 2) if rng.random() < p]
    return nodes, edges


def test_triangle_is_one_clique():
    graph = nx.complete_graph(["a", "b", "c"])
    assert enumerate_maximal_cliques(graph) == [frozenset("abc")]


def test_path_graph_cliques_are_its_edges():
    graph = nx.path_graph(["a", "b", "c", "d"])
    assert enumerate_maximal_cliques(graph) == [frozenset("ab"), frozenset("bc"), frozenset("cd")]


def test_isolated_nodes_need_min_size_one():
    graph = nx.Graph()
    graph.add_nodes_from(["x", "y"])
    assert enumerate_maximal_cliques(graph) == [frozenset("x"), frozenset("y")]
    assert enumerate_maximal_cliques(graph, min_size=2) == []


@pytest.mark.parametrize("seed", range(100))
def test_enumeration_matches_brute_force(seed):
    nodes, edges = random_graph(seed, 6 + seed % 7, 0.5)
    graph = nx.Graph()
    graph.add_nodes_from(nodes)
    graph.add_edges_from(edges)
    assert set(enumerate_maximal_cliques(graph)) == brute_force_maximal_cliques(graph)


def test_incremental_update_sequence():
    store = CliqueStore()
    edges = [("a1", "a2"), ("a1", "a3"), ("a2", "a3"), ("a2", "a4")]
    updates = insert_all(store, ["a1", "a2", "a3", "a4"], edges)
    assert updates[0].empty
    assert updates[1].created == [0]
    assert updates[2].extended == [(0, "a3")]
    assert updates[3].created == [1]
    assert store.cliques == {0: frozenset({"a1", "a2", "a3"}), 1: frozenset({"a2", "a4"})}

    tester = edge_tester(edges + [("a_new", "a1"), ("a_new", "a2"), ("a_new", "a4")])
    update = update_with_path(store, "a_new", tester)
    assert update.extended == [(1, "a_new")]
    assert update.created == [2]
    assert update.frozen == []
    assert store.members(2) == frozenset({"a1", "a2", "a_new"})
    assert store.members(1) == frozenset({"a2", "a4", "a_new"})
    assert store.cliques_of("a2") == [0, 1, 2]
    assert store.find({"a1", "a2", "a3"}) == 0


def test_path_without_conflicts_changes_nothing():
    store = CliqueStore()
    insert_all(store, ["a", "b"], [("a", "b")])
    before = dict(store.cliques)
    update = update_with_path(store, "lonely", edge_tester([("a", "b")]))
    assert update.empty
    assert store.cliques == before
    assert "lonely" in store.graph
    assert store.cliques_of("lonely") == []


def test_duplicate_path_is_rejected():
    store = CliqueStore()
    update_with_path(store, "a", edge_tester([]))
    with pytest.raises(DuplicatePath):
        update_with_path(store, "a", edge_tester([]))
    graph = ConflictGraph()
    graph.add_path("x", [])
    with pytest.raises(DuplicatePath):
        graph.add_path("x", [])


def test_universal_path_extends_every_clique():
    store = CliqueStore()
    edges = [("a", "b"), ("b", "c")]
    insert_all(store, ["a", "b", "c"], edges)
    assert sorted(store.cliques.values(), key=sorted) == [frozenset("ab"), frozenset("bc")]
    # d hits a and c but not b
    update = update_with_path(store, "d", edge_tester(edges + [("d", "a"), ("d", "c")]))
    assert update.frozen == []
    everyone = edges + [("d", "a"), ("d", "c")] + [("x", n) for n in "abcd"]
    update = update_with_path(store, "x", edge_tester(everyone))
    assert len(update.extended) == 4 and update.created == []
    active = set(store.cliques.values())
    assert not any(small < big for small in active for big in active)
    assert set(enumerate_maximal_cliques(store.graph.graph, min_size=2)) == active
    assert all("x" in c for c in active)


@pytest.mark.parametrize("seed", range(100))
def test_random_insertions_keep_maximal_cliques(seed):
    nodes, edges = random_graph(seed, 6 + seed % 7, 0.45)
    order = [str(n) for n in np.random.default_rng(seed + 1000).permutation(nodes)]
    store = CliqueStore()
    tester = edge_tester(edges)
    for node in order:
        update_with_path(store, node, tester)
        active = set(store.cliques.values())
        assert active == set(enumerate_maximal_cliques(store.graph.graph, min_size=2))
        assert all(len(c) >= 2 for c in active)
        assert all(store.graph.is_clique(c) for c in active)
    for a, b in store.graph.edges:
        assert any({a, b} <= c for c in store.cliques.values())
    assert set(store.cliques) | set(store.frozen) == set(range(len(store.cliques) + len(store.frozen)))
    assert reconcile(store).empty


def test_reconcile_repairs_a_stale_store():
    store = CliqueStore()
    edges = [("a", "b"), ("b", "c"), ("a", "c")]
    insert_all(store, ["a", "b", "c"], edges)
    store.graph.add_path("d", ["a", "b", "c"])
    update = reconcile(store)
    assert len(update.created) == 1
    assert update.frozen == [0]
    assert set(store.cliques.values()) == {frozenset("abcd")}
    assert store.mean_size() == 4.0


def test_dump_lists_edges_and_cliques():
    store = CliqueStore()
    insert_all(store, ["a", "b", "c"], [("a", "b"), ("b", "c")])
    text = store.dump()
    assert text.startswith("# edges (2)")
    assert "# cliques (2 active, 0 frozen)" in text
