import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rigmod.errors import EmptyGraph, InvalidParameters, TooLarge
from rigmod.graph_core import Graph, RigParams, project, sample_incidence
from rigmod.modularity_engine import TOLERANCE, Partition, best_restricted, complement_check, deviation, \
    exact_modularity, large_side_deviation, louvain, restricted_growth_chunks, score, _aggregate, _local_moving

from .strategies import graphs, graphs_with_subsets, oracle_graphs


def _to_networkx(graph: Graph) -> nx.Graph:
    result = nx.Graph()
    result.add_nodes_from(range(graph.n))
    result.add_edges_from(graph.edges())
    return result


# ==================== Partition ====================

def test_partition_compacts_labels():
    partition = Partition.from_labels([5, 3, 5, 9])
    assert partition.assignment.tolist() == [0, 1, 0, 2]
    assert partition.block_count == 3
    assert partition.blocks() == [[0, 2], [1], [3]]


def test_partition_rejects_empty_block():
    with pytest.raises(InvalidParameters):
        Partition(assignment=np.array([0, 2]), block_count=3)


def test_partition_from_blocks_requires_cover():
    with pytest.raises(InvalidParameters):
        Partition.from_blocks(4, [[0, 1], [2]])
    with pytest.raises(InvalidParameters):
        Partition.from_blocks(3, [[0, 1], [1, 2]])


# ==================== score / deviation ====================

def test_single_block_scores_zero(two_triangles):
    assert score(two_triangles, Partition.trivial(6)).score == 0.0


def test_k2_singletons(k2):
    assert score(k2, Partition.from_labels([0, 1])).score == pytest.approx(-0.5, abs=TOLERANCE)


def test_two_triangles(two_triangles):
    report = score(two_triangles, Partition.from_labels([0, 0, 0, 1, 1, 1]))
    assert report.score == pytest.approx(0.5, abs=TOLERANCE)
    assert report.method == "supplied"
    assert [term.edge_fraction for term in report.per_block] == [0.5, 0.5]
    assert [term.volume_fraction for term in report.per_block] == [0.5, 0.5]


def test_score_rejects_edgeless_graph():
    with pytest.raises(EmptyGraph):
        score(Graph.empty(3), Partition.trivial(3))


def test_score_rejects_size_mismatch(k2):
    with pytest.raises(InvalidParameters):
        score(k2, Partition.trivial(3))


def test_deviation_examples(triangle_plus_edge):
    assert deviation(triangle_plus_edge, range(5)) == pytest.approx(0.0, abs=TOLERANCE)
    assert deviation(triangle_plus_edge, []) == 0.0
    assert deviation(triangle_plus_edge, [0, 1, 2]) == pytest.approx(3 / 16, abs=TOLERANCE)


def test_complement_check_examples(triangle_plus_edge):
    assert complement_check(triangle_plus_edge, []) == pytest.approx((0.0, 0.0), abs=TOLERANCE)
    assert complement_check(triangle_plus_edge, [0, 1, 2]) == pytest.approx((3 / 16, 3 / 16), abs=TOLERANCE)


@given(graphs(max_n=9), st.data())
def test_score_report_invariants(graph, data):
    labels = data.draw(st.lists(st.integers(0, 3), min_size=graph.n, max_size=graph.n))
    report = score(graph, Partition.from_labels(labels))
    assert math.isclose(report.score, sum(t.deviation for t in report.per_block), abs_tol=TOLERANCE)
    assert sum(t.edge_fraction for t in report.per_block) <= 1.0 + TOLERANCE
    assert math.isclose(sum(t.volume_fraction for t in report.per_block), 1.0, abs_tol=TOLERANCE)
    assert all(0.0 <= t.volume_fraction <= 1.0 for t in report.per_block)


@given(graphs(max_n=9), st.data())
def test_score_matches_networkx(graph, data):
    labels = data.draw(st.lists(st.integers(0, 3), min_size=graph.n, max_size=graph.n))
    partition = Partition.from_labels(labels)
    expected = nx.community.modularity(_to_networkx(graph), [set(b) for b in partition.blocks()])
    assert score(graph, partition).score == pytest.approx(expected, abs=1e-12)


@given(graphs(max_n=9), st.data())
def test_score_invariant_under_relabeling(graph, data):
    labels = np.array(data.draw(st.lists(st.integers(0, 3), min_size=graph.n, max_size=graph.n)))
    shuffled = (labels * 7 + 3) % 11
    assert score(graph, Partition.from_labels(labels)).score == pytest.approx(
        score(graph, Partition.from_labels(shuffled)).score, abs=TOLERANCE)


@given(graphs_with_subsets())
def test_complement_symmetry(case):
    graph, mask = case
    inside, outside = complement_check(graph, mask)
    assert inside == pytest.approx(outside, abs=TOLERANCE)


@given(graphs_with_subsets())
def test_volume_identity(case):
    graph, mask = case
    e_s = int(np.count_nonzero(mask[graph.heads] & mask[graph.tails]))
    cross = int(np.count_nonzero(mask[graph.heads] != mask[graph.tails]))
    assert graph.degrees[mask].sum() == 2 * e_s + cross


# ==================== exhaustive search ====================

@pytest.mark.parametrize("n, bell", [(1, 1), (3, 5), (5, 52), (6, 203), (7, 877)])
def test_restricted_growth_counts(n, bell):
    total = sum(len(chunk) for chunk in restricted_growth_chunks(n, n))
    assert total == bell


def test_restricted_growth_caps_blocks():
    strings = np.vstack(list(restricted_growth_chunks(6, 2)))
    assert len(strings) == 2 ** 5
    assert strings.max() == 1
    assert np.all(strings[:, 0] == 0)


def test_exact_small_graphs(k2, two_triangles):
    assert exact_modularity(k2).score == pytest.approx(0.0, abs=TOLERANCE)
    path = Graph.from_pairs(3, [(0, 1), (1, 2)])
    assert exact_modularity(path).score == pytest.approx(0.0, abs=TOLERANCE)
    report = exact_modularity(two_triangles)
    assert report.score == pytest.approx(0.5, abs=TOLERANCE)
    assert report.method == "exact"
    assert sorted(map(sorted, report.partition.blocks())) == [[0, 1, 2], [3, 4, 5]]


def test_exact_ignores_isolated_vertices():
    graph = Graph.from_pairs(11, [(0, 1), (0, 2), (1, 2), (8, 9), (8, 10), (9, 10)])
    assert exact_modularity(graph).score == pytest.approx(0.5, abs=TOLERANCE)


def test_exact_limit():
    graph = Graph.from_pairs(12, [(0, 1)])
    with pytest.raises(TooLarge):
        exact_modularity(graph)
    with pytest.raises(TooLarge):
        exact_modularity(Graph.from_pairs(6, [(0, 1)]), max_n=5)


def test_exact_limit_from_environment(monkeypatch):
    monkeypatch.setenv("RIGMOD_EXACT_MAX_N", "4")
    with pytest.raises(TooLarge):
        exact_modularity(Graph.from_pairs(5, [(0, 1)]))


def test_exact_rejects_edgeless_graph():
    with pytest.raises(EmptyGraph):
        exact_modularity(Graph.empty(4))


def test_best_restricted_examples(two_triangles, complete_graph):
    report = best_restricted(two_triangles, 2)
    assert report.score == pytest.approx(0.5, abs=TOLERANCE)
    assert report.method == "bipartition"
    assert best_restricted(complete_graph(4), 2).score == pytest.approx(0.0, abs=TOLERANCE)
    assert best_restricted(two_triangles, 1).score == 0.0


def test_best_restricted_limits():
    with pytest.raises(TooLarge):
        best_restricted(Graph.from_pairs(27, [(0, 1)]), 2)
    with pytest.raises(TooLarge):
        best_restricted(Graph.from_pairs(14, [(0, 1)]), 3)
    with pytest.raises(InvalidParameters):
        best_restricted(Graph.from_pairs(3, [(0, 1)]), 0)


def test_exact_sandwich_on_random_graphs():
    for graph in oracle_graphs(60):
        exact = exact_modularity(graph).score
        assert 0.0 - TOLERANCE <= exact < 1.0
        for k in (2, 3):
            restricted = best_restricted(graph, k).score
            assert restricted <= exact + TOLERANCE
            assert exact <= k / (k - 1) * restricted + TOLERANCE


@settings(max_examples=40, deadline=None)
@given(graphs(min_n=4, max_n=9))
def test_exact_matches_networkx_on_best_partition(graph):
    report = exact_modularity(graph)
    expected = nx.community.modularity(_to_networkx(graph), [set(b) for b in report.partition.blocks()])
    assert report.score == pytest.approx(expected, abs=1e-12)


def test_large_side_deviation_bounds_modularity():
    for graph in oracle_graphs(30, seed=1):
        value, subset = large_side_deviation(graph)
        assert 2 * len(subset) >= graph.n
        assert deviation(graph, subset) == pytest.approx(value, abs=TOLERANCE)
        assert exact_modularity(graph).score <= 4.0 * value + TOLERANCE


def test_large_side_deviation_limit():
    with pytest.raises(TooLarge):
        large_side_deviation(Graph.from_pairs(17, [(0, 1)]))


# ==================== louvain ====================

def test_louvain_two_triangles(two_triangles):
    report = louvain(two_triangles)
    assert report.score == pytest.approx(0.5, abs=TOLERANCE)
    assert report.method == "louvain"
    assert sorted(map(sorted, report.partition.blocks())) == [[0, 1, 2], [3, 4, 5]]


def test_louvain_complete_graph(complete_graph):
    assert louvain(complete_graph(6)).score == pytest.approx(0.0, abs=TOLERANCE)


def test_louvain_is_sound_on_random_graphs():
    for graph in oracle_graphs(60, seed=2):
        exact = exact_modularity(graph).score
        for seed in (None, 5):
            report = louvain(graph, seed=seed)
            assert 0.0 <= report.score <= exact + TOLERANCE


def test_louvain_deterministic_per_seed():
    graph = project(sample_incidence(RigParams(n=300, m=60, p=0.03, seed=8)))
    first, second = louvain(graph, seed=3), louvain(graph, seed=3)
    assert np.array_equal(first.partition.assignment, second.partition.assignment)
    assert np.array_equal(louvain(graph).partition.assignment, louvain(graph).partition.assignment)


def test_louvain_finds_planted_cliques():
    pairs = []
    for block in range(10):
        members = range(block * 8, block * 8 + 8)
        pairs.extend((u, v) for u in members for v in members if u < v)
    pairs.extend((block * 8, (block + 1) * 8 + 1) for block in range(9))
    graph = Graph.from_pairs(80, pairs)
    report = louvain(graph)
    assert report.partition.block_count == 10
    assert report.score > 0.85


def test_local_moving_prefers_lowest_block_and_strict_gain(two_triangles):
    indptr, indices = two_triangles.adjacency
    community, moved = _local_moving(indptr.tolist(), indices.tolist(), [1] * len(indices),
                                     two_triangles.degrees.tolist(), two_triangles.edge_count, range(6))
    assert moved
    assert community == [1, 1, 1, 4, 4, 4]


def test_aggregate_keeps_strength_and_crossing_weight():
    graph = Graph.from_pairs(6, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)])
    indptr, indices = graph.adjacency
    merged = _aggregate(indptr, indices, np.ones(len(indices), dtype=np.int64), graph.degrees, [1, 1, 1, 4, 4, 4])
    merged_indptr, merged_indices, merged_weights, merged_strength, mapping = merged
    assert merged_indptr.tolist() == [0, 1, 2]
    assert merged_indices.tolist() == [1, 0]
    assert merged_weights.tolist() == [1, 1]
    assert merged_strength.tolist() == [7, 7]
    assert mapping.tolist() == [0, 0, 0, 1, 1, 1]


def test_louvain_quality_matches_networkx_on_medium_graph():
    graph = project(sample_incidence(RigParams(n=2000, m=2000, p=0.0015, seed=4)))
    report = louvain(graph)
    reference = _to_networkx(graph)
    expected = nx.community.modularity(reference, nx.community.louvain_communities(reference, seed=0))
    assert report.metadata["levels"] >= 1
    assert report.score >= expected - 0.05
    assert report.score == pytest.approx(
        nx.community.modularity(reference, [set(b) for b in report.partition.blocks()]), abs=1e-9)


def test_louvain_rejects_edgeless_graph():
    with pytest.raises(EmptyGraph):
        louvain(Graph.empty(5))


def test_report_serialisations(two_triangles):
    report = louvain(two_triangles)
    lines = report.key_value_lines()
    assert lines[0] == "method=louvain"
    assert lines[1] == "score=0.5"
    assert report.blocks_csv().splitlines()[0] == "block,edge_fraction,volume_fraction,deviation"
    assert report.as_dict()["assignment"] == report.partition.assignment.tolist()
