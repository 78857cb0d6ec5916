import math

import numpy as np
import pytest
from hypothesis import given

from rigmod.constructions import NONEMPTY_EXCLUSIVE, THEOREM_THRESHOLD, AttrPartitionConfig, \
    admissibility_constant, build_attribute_partition, couple_hat, coupling_gap_check, matched_er_probability, \
    sample_matched_er, select_attributes, theorem1_admissible, theorem1_bounds
from rigmod.errors import EdgesOnlyIncidence, InvalidParameters
from rigmod.graph_core import Incidence, RigParams, project, sample_incidence, sample_incidence_sparse
from rigmod.modularity_engine import TOLERANCE, exact_modularity, score
from rigmod.structure_stats import attribute_stats

from .strategies import incidences


def _within(sample, expected, sigmas=4.0):
    sample = np.asarray(sample, dtype=np.float64)
    error = sample.std(ddof=1) / math.sqrt(len(sample))
    return abs(sample.mean() - expected) <= sigmas * max(error, 1e-12)


# ==================== AttrPartitionConfig ====================

@pytest.mark.parametrize("kwargs", [{"epsilon": 0.0}, {"epsilon": 1.0}, {"mode": "greedy"}])
def test_config_rejects_invalid(kwargs):
    with pytest.raises(InvalidParameters):
        AttrPartitionConfig(**kwargs)


def test_admissibility_constant():
    assert admissibility_constant(0.1) == pytest.approx(300 * math.log(400))
    assert AttrPartitionConfig(epsilon=0.1).a_eps == pytest.approx(1797.4, abs=0.1)


# ==================== build_attribute_partition ====================

def test_exclusive_triangles_partition(exclusive_triangles):
    partition = build_attribute_partition(exclusive_triangles, RigParams(n=6, m=2, p=0.5),
                                          AttrPartitionConfig(mode=NONEMPTY_EXCLUSIVE))
    assert partition.blocks() == [[0, 1, 2], [3, 4, 5]]
    graph = project(exclusive_triangles)
    assert score(graph, partition).score == pytest.approx(0.5, abs=TOLERANCE)
    assert exact_modularity(graph).score == pytest.approx(0.5, abs=TOLERANCE)


def test_no_exclusive_members_gives_one_block():
    incidence = Incidence.from_members(4, [[0, 1, 2, 3], [0, 1, 2, 3]])
    for mode in (NONEMPTY_EXCLUSIVE, THEOREM_THRESHOLD):
        partition = build_attribute_partition(incidence, RigParams(n=4, m=2, p=1.0),
                                              AttrPartitionConfig(mode=mode))
        assert partition.blocks() == [[0, 1, 2, 3]]


def test_remainder_block_collects_the_rest():
    incidence = Incidence.from_members(7, [[0, 1], [2, 3, 4], [4, 5]])
    partition = build_attribute_partition(incidence, RigParams(n=7, m=3, p=0.3),
                                          AttrPartitionConfig(mode=NONEMPTY_EXCLUSIVE))
    assert partition.blocks() == [[0, 1], [2, 3], [4, 5, 6]]


def test_partition_refuses_edges_only():
    incidence = sample_incidence_sparse(RigParams(n=40, m=80, p=0.05, seed=2), edges_only=True)
    with pytest.raises(EdgesOnlyIncidence):
        build_attribute_partition(incidence, RigParams(n=40, m=80, p=0.05), AttrPartitionConfig())


@given(incidences())
def test_partition_blocks_are_exclusive_sets(incidence):
    config = AttrPartitionConfig(mode=NONEMPTY_EXCLUSIVE)
    partition = build_attribute_partition(incidence, RigParams(n=incidence.n, m=incidence.m, p=0.5), config)
    assert partition.n == incidence.n
    exclusive = [set(block) for block in attribute_stats(incidence).exclusive_lists() if len(block) >= 2]
    blocks = [set(block) for block in partition.blocks()]
    for block in exclusive:
        assert block in blocks
    assert len(blocks) - len(exclusive) in (0, 1)


def test_disjoint_cliques_partition_is_optimal():
    rng = np.random.default_rng(3)
    for _ in range(20):
        sizes = rng.integers(2, 5, size=rng.integers(2, 4))
        n = int(sizes.sum())
        if n > 11:
            continue
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        incidence = Incidence.from_members(n, [list(range(s, s + k)) for s, k in zip(starts, sizes)])
        partition = build_attribute_partition(incidence, RigParams(n=n, m=len(sizes), p=0.5),
                                              AttrPartitionConfig(mode=NONEMPTY_EXCLUSIVE))
        graph = project(incidence)
        assert score(graph, partition).score == pytest.approx(exact_modularity(graph).score, abs=TOLERANCE)


def test_theorem_threshold_gates_by_formula():
    param = RigParams(n=10_000, m=100, p=1e-3, seed=6)
    incidence = sample_incidence(param)
    stats = attribute_stats(incidence)
    clique_mean = param.n * param.p
    exclusive_mean = clique_mean * math.exp(-param.m * param.p)
    expected = [i for i in range(100)
                if abs(stats.exclusive_sizes[i] - exclusive_mean) <= 0.3 * exclusive_mean
                and abs(stats.sizes[i] - clique_mean) <= 0.3 * clique_mean]
    config = AttrPartitionConfig(epsilon=0.3, mode=THEOREM_THRESHOLD)
    assert select_attributes(stats, param, config).tolist() == expected
    partition = build_attribute_partition(incidence, param, config)
    assert partition.block_count == len(expected) + 1


@pytest.mark.slow
def test_theorem_threshold_selects_most_attributes():
    config = AttrPartitionConfig(epsilon=0.3, mode=THEOREM_THRESHOLD)
    hits = 0
    for seed in range(100):
        param = RigParams(n=1_000_000, m=100, p=1e-3, seed=seed)
        selected = select_attributes(attribute_stats(sample_incidence(param)), param, config)
        hits += len(selected) >= 0.7 * param.m
    assert hits >= 90


# ==================== theorem1_bounds ====================

def test_bounds_at_zero_mp():
    bounds = theorem1_bounds(100, 0.0, 0.01)
    assert bounds.stated == pytest.approx(1 - 0.16)
    assert bounds.proof_level == pytest.approx(1 - 0.31)


def test_bounds_direct_evaluation():
    bounds = theorem1_bounds(100, 1e-3, 0.1)
    assert bounds.proof_level == pytest.approx(0.69 * math.exp(-0.2))
    assert bounds.proof_level == pytest.approx(0.565, abs=1e-3)
    assert bounds.stated == pytest.approx(-0.6 * math.exp(-0.1))
    assert bounds.a_eps == pytest.approx(admissibility_constant(0.1))


def test_bounds_reject_bad_epsilon():
    with pytest.raises(InvalidParameters):
        theorem1_bounds(10, 0.1, 1.5)


def test_admissibility():
    assert not theorem1_admissible(10_000, 100, 1e-3, 0.3)
    assert theorem1_admissible(10 ** 7, 10, 1e-3, 0.3)


# ==================== couple_hat ====================

def test_coupling_without_cliques():
    coupling = couple_hat(Incidence.from_members(4, [[0], [], [3]]), seed=1)
    assert coupling.g_hat.edge_count == 0
    assert coupling.delta == 0 == coupling.g.edge_count


def test_coupling_single_pair_is_forced():
    coupling = couple_hat(Incidence.from_members(2, [[0, 1]]), seed=5)
    assert coupling.g_hat.edges() == coupling.g.edges() == {(0, 1)}
    assert coupling.delta == 0


@given(incidences())
def test_coupling_containment(incidence):
    coupling = couple_hat(incidence, seed=incidence.total_memberships)
    assert coupling.g_hat.edges() <= coupling.g.edges()
    assert coupling.delta == coupling.g.edge_count - coupling.g_hat.edge_count >= 0
    assert coupling.g_hat.edge_count <= int(np.count_nonzero(incidence.sizes >= 2))


def test_coupling_is_reproducible():
    incidence = sample_incidence(RigParams(n=100, m=500, p=0.02, seed=4))
    first, second = couple_hat(incidence, seed=9), couple_hat(incidence, seed=9)
    assert np.array_equal(first.g_hat.keys, second.g_hat.keys)


def test_coupling_pair_choice_is_uniform():
    incidence = Incidence.from_members(4, [[0, 1, 2, 3]])
    counts = {}
    for seed in range(3000):
        edge = next(iter(couple_hat(incidence, seed=seed).g_hat.edges()))
        counts[edge] = counts.get(edge, 0) + 1
    assert len(counts) == 6
    assert all(400 <= count <= 600 for count in counts.values())


def test_coupling_means():
    n, m, p = 100, 500, 0.02
    hats, deltas, eligible = [], [], []
    for seed in range(500):
        incidence = sample_incidence(RigParams(n=n, m=m, p=p, seed=seed))
        coupling = couple_hat(incidence, seed=10_000 + seed)
        hats.append(coupling.g_hat.edge_count)
        deltas.append(coupling.delta)
        eligible.append(int(np.count_nonzero(incidence.sizes >= 2)))
    # each attribute with V_i >= 2 draws a uniform pair, so distinct pairs follow occupancy
    q_hat = matched_er_probability(n, m, p).q_hat
    pairs = n * (n - 1) / 2
    exact_mean = pairs * -math.expm1(m * math.log1p(-q_hat / pairs))
    assert _within(hats, exact_mean)
    assert np.mean(deltas) <= m * (n * p) ** 3 / 2
    assert all(h <= e for h, e in zip(hats, eligible))


# ==================== matched ER ====================

def test_matched_er_examples():
    zero = matched_er_probability(50, 10, 0.0)
    assert (zero.q_hat, zero.p_bar) == (0.0, 0.0)
    full = matched_er_probability(2, 3, 1.0)
    assert full.q_hat == pytest.approx(1.0)
    assert full.p_bar == pytest.approx(1 - math.exp(-3))


@pytest.mark.parametrize("p", [1e-4, 1e-5])
def test_q_hat_small_p_asymptotics(p):
    n = 100
    ratio = matched_er_probability(n, 10, p).q_hat / (n * (n - 1) / 2 * p * p)
    assert abs(ratio - 1.0) <= 2 * n * p


def test_q_hat_closed_form():
    n, p = 40, 0.03
    expected = 1 - (1 - p) ** n - n * p * (1 - p) ** (n - 1)
    assert matched_er_probability(n, 7, p).q_hat == pytest.approx(expected, rel=1e-10)


def test_matched_er_is_monotone():
    p_values = [0.0, 1e-4, 1e-3, 0.01, 0.1, 0.5, 1.0]
    by_p = [matched_er_probability(30, 20, p).p_bar for p in p_values]
    by_m = [matched_er_probability(30, m, 0.05).p_bar for m in (1, 2, 5, 50, 500)]
    assert by_p == sorted(by_p)
    assert by_m == sorted(by_m)


def test_matched_er_rejects_single_vertex():
    with pytest.raises(InvalidParameters):
        matched_er_probability(1, 5, 0.1)


def test_sample_matched_er_edge_count():
    n, m, p = 300, 2000, 0.003
    p_bar = matched_er_probability(n, m, p).p_bar
    counts = [sample_matched_er(n, m, p, seed=s).edge_count for s in range(200)]
    assert _within(counts, n * (n - 1) / 2 * p_bar)


# ==================== coupling_gap_check ====================

def test_gap_check_without_memberships():
    summary = coupling_gap_check(100, 1000, 0.0, 0.5, reps=5, seed=1)
    assert summary.fraction_within_bound == 1.0
    assert summary.deltas == [0] * 5
    assert summary.containment_holds


def test_gap_check_fraction_counts_deltas():
    summary = coupling_gap_check(200, 3000, 0.004, 0.5, reps=10, seed=2)
    assert summary.threshold > 0
    below = [d for d in summary.deltas if d <= summary.threshold]
    assert summary.fraction_within_bound == len(below) / 10


def test_gap_check_preconditions():
    with pytest.raises(InvalidParameters):
        coupling_gap_check(100, 10, 0.02, 0.5, reps=1, seed=0)
    with pytest.raises(InvalidParameters):
        coupling_gap_check(100, 10, 0.001, 0.5, reps=0, seed=0)


@pytest.mark.slow
def test_gap_check_theorem_regime():
    summary = coupling_gap_check(10_000, 2_000_000, 1e-5, 0.5, reps=50, seed=11)
    assert summary.containment_holds
    assert summary.fraction_within_bound >= 0.9
