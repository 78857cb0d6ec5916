"""Regime checks on the shipped presets and oracle checks at full instance counts (run with pytest -m slow)"""
import math
import time

import numpy as np
import pytest

from rigmod.constructions import coupling_gap_check
from rigmod.experiment_harness import preset_config, run_replication, run_sweep
from rigmod.modularity_engine import TOLERANCE, best_restricted, complement_check, exact_modularity, \
    large_side_deviation, louvain

from .strategies import oracle_graphs

pytestmark = pytest.mark.slow


def _median(rows, column, **where):
    values = [getattr(row, column) for row in rows
              if all(getattr(row, key) == value for key, value in where.items())]
    return float(np.median(values))


# ==================== Oracles ====================

def test_sandwich_and_louvain_soundness_on_300_graphs():
    for graph in oracle_graphs(300, seed=100):
        exact = exact_modularity(graph).score
        for k in (2, 3):
            restricted = best_restricted(graph, k).score
            assert restricted <= exact + TOLERANCE
            assert exact <= k / (k - 1) * restricted + TOLERANCE
        assert louvain(graph).score <= exact + TOLERANCE


def test_complement_symmetry_and_large_side_bound_up_to_16_vertices():
    rng = np.random.default_rng(101)
    checked_exact = 0
    for graph in oracle_graphs(200, seed=102, min_n=4, max_n=16):
        subset = np.flatnonzero(rng.random(graph.n) < 0.5)
        inside, outside = complement_check(graph, subset)
        assert inside == pytest.approx(outside, abs=TOLERANCE)
        value, largest = large_side_deviation(graph)
        assert 2 * len(largest) >= graph.n
        if graph.n <= 11:
            assert exact_modularity(graph).score <= 4.0 * value + TOLERANCE
            checked_exact += 1
    assert checked_exact >= 50


# ==================== Presets ====================

@pytest.mark.parametrize("preset, floor", [("cor1-strong", 0.9), ("cor1-moderate", 0.7)])
def test_attribute_partition_in_sparse_attribute_regime(preset, floor):
    rows = run_sweep(preset_config(preset, master_seed=11))
    assert len(rows) == 20
    assert _median(rows, "attr_partition_mod") >= floor
    assert all(row.attr_partition_mod <= row.louvain_mod + 0.05 for row in rows)
    assert all(row.proof_bound == pytest.approx(math.exp(-2 * row.m_p)) for row in rows)


def test_louvain_decreases_with_np_at_fixed_density_of_attributes():
    config = preset_config("thm2", master_seed=12)
    rows = run_sweep(config)
    medians = [_median(rows, "louvain_mod", p=p) for _, _, p in config.grid]
    assert medians[0] > medians[1] > medians[2]
    assert medians[2] < 0.5


def test_densest_inverse_root_degree_row_is_fast():
    started = time.perf_counter()
    row = run_replication(preset_config("thm3"), 2, 0)
    assert time.perf_counter() - started < 120.0
    assert row.edges > 500_000
    assert 0.0 < row.louvain_mod < 1.0


def test_louvain_scales_like_inverse_root_degree():
    config = preset_config("thm3", master_seed=13)
    started = time.perf_counter()
    rows = run_sweep(config)
    assert time.perf_counter() - started < 15 * 60
    products = [_median(rows, "louvain_mod", m=m) * math.sqrt(n * m * p * p) for n, m, p in config.grid]
    assert max(products) / min(products) <= 2.0


def test_matched_er_is_close_when_np_is_small():
    config = preset_config("thm4", master_seed=14)
    rows = run_sweep(config)
    rig = np.mean([row.louvain_mod for row in rows])
    er = np.mean([row.er_louvain_mod for row in rows])
    assert abs(rig - er) <= 0.1
    n, m, p = config.grid[0]
    summary = coupling_gap_check(n, m, p, 0.1, 30, 14)
    assert summary.containment_holds
    assert summary.fraction_within_bound >= 0.9
