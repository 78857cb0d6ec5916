"""
rigmod: modularity of random intersection graphs G(n, m, p)
Generators, exact and heuristic modularity, clique-cover statistics,
proof constructions and a seeded sweep harness
"""

from .constructions import AttrPartitionConfig, build_attribute_partition, couple_hat, coupling_gap_check, \
    matched_er_probability, sample_matched_er, theorem1_bounds
from .errors import RigModError
from .experiment_harness import PRESETS, SweepConfig, SweepRow, preset_config, regime_bound, run_sweep
from .graph_core import Graph, Incidence, RigParams, model_moments, project, sample_er, sample_incidence, \
    sample_incidence_sparse
from .modularity_engine import ModularityReport, Partition, best_restricted, complement_check, deviation, \
    exact_modularity, louvain, score
from .reporting import report
from .structure_stats import attribute_stats, clique_bounds, e1_count, e2_count, regime_diagnostics, \
    subset_counts
from .verification import verify

__all__ = [
    'AttrPartitionConfig', 'Graph', 'Incidence', 'ModularityReport', 'PRESETS', 'Partition', 'RigModError',
    'RigParams', 'SweepConfig', 'SweepRow', 'attribute_stats', 'best_restricted', 'build_attribute_partition',
    'clique_bounds', 'complement_check', 'couple_hat', 'coupling_gap_check', 'deviation', 'e1_count',
    'e2_count', 'exact_modularity', 'louvain', 'matched_er_probability', 'model_moments', 'preset_config',
    'project', 'regime_bound', 'regime_diagnostics', 'report', 'run_sweep', 'sample_er', 'sample_incidence',
    'sample_incidence_sparse', 'sample_matched_er', 'score', 'subset_counts', 'theorem1_bounds', 'verify',
]
