#!/usr/bin/env python3
"""
rigmod MCP Server
Random intersection graph modularity lab exposed as MCP tools
"""

import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

# Redirect all print to stderr for MCP compatibility (must be before any imports that print)
import builtins
_original_print = builtins.print
def print(*args, **kwargs):
    """Override print to always write to stderr for MCP"""
    kwargs['file'] = sys.stderr
    _original_print(*args, **kwargs)
builtins.print = print

# Get the absolute path to this script's directory
SERVER_DIR = Path(__file__).parent.absolute()

# Import FastMCP
from mcp.server.fastmcp import FastMCP

from rigmod import constructions, experiment_harness, modularity_engine, reporting, structure_stats, verification
from rigmod.formats import parse_edge_list, parse_incidence, parse_partition, write_edge_list, write_incidence
from rigmod.graph_core import Graph, Incidence, RigParams, model_moments, project, sample_incidence, \
    sample_incidence_sparse
from rigmod.modularity_engine import Partition
from rigmod.settings import get_data_dir, get_exact_max_n, get_membership_cap, get_worker_count

# Load environment variables
load_dotenv()

# Initialize MCP server
mcp = FastMCP("rigmod")

DATA_DIR = get_data_dir()
print("🚀 Initializing rigmod MCP Server...")
print(f"📁 Server directory: {SERVER_DIR}")
print(f"📁 Data directory: {DATA_DIR}")

# Ensure directories exist (using absolute paths)
DATA_DIR.mkdir(parents=True, exist_ok=True)


# ==================== Helper Functions ====================

def resolve_file_path(file_path: str) -> Optional[str]:
    """
    Resolve a path given as-is, with ~ expanded, or relative to the data or server directory

    Args:
        file_path: Path provided by the client

    Returns:
        Resolved absolute path if file exists, None otherwise
    """
    if os.path.exists(file_path):
        return os.path.abspath(file_path)

    expanded_path = os.path.expanduser(file_path)
    if os.path.exists(expanded_path):
        return os.path.abspath(expanded_path)

    for base in (DATA_DIR, SERVER_DIR):
        candidate = base / file_path
        if candidate.exists():
            return str(candidate.absolute())

    return None


def _read(file_path: str) -> str:
    resolved = resolve_file_path(file_path)
    if resolved is None:
        raise FileNotFoundError(f"File not found at {file_path}")
    return Path(resolved).read_text(encoding="utf-8")


def load_graph(file_path: str) -> Graph:
    """Read an edge list, or an incidence file which is projected first"""
    text = _read(file_path)
    header = next((line.split() for line in text.splitlines() if line.strip()), [])
    if len(header) >= 4 and header[2] == "m":
        return project(parse_incidence(text))
    return parse_edge_list(text)


def load_incidence(file_path: str) -> Incidence:
    return parse_incidence(_read(file_path))


def _output_path(name: str) -> Path:
    path = Path(name)
    return path if path.is_absolute() else DATA_DIR / path


def _error(e: Exception) -> str:
    print(f"❌ {type(e).__name__}: {e}")
    return json.dumps({"success": False, "error": str(e)}, indent=2)


# ==================== Generation Tools ====================

@mcp.tool()
def generate_graph(n: int, m: int, p: float, seed: int = 0, sparse: bool = False, edges_only: bool = False,
                   name: Optional[str] = None) -> str:
    """
    Sample G(n, m, p) and save its incidence and projected edge list to the data directory.

    Args:
        n: Number of vertices
        m: Number of attributes
        p: Probability that a vertex holds an attribute
        seed: Replication seed
        sparse: Draw clique sizes first instead of scanning every cell
        edges_only: With sparse, keep only attributes with at least two members
        name: File stem for the outputs (default rig_<n>_<m>_<p>_<seed>)

    Returns:
        JSON string with model moments, edge count and output paths
    """
    try:
        params = RigParams(n=n, m=m, p=p, seed=seed)
        if sparse or edges_only:
            incidence = sample_incidence_sparse(params, edges_only=edges_only)
        else:
            incidence = sample_incidence(params)
        graph = project(incidence)
        moments = model_moments(n, m, p)

        stem = name or f"rig_{n}_{m}_{p:g}_{seed}"
        incidence_path = _output_path(f"{stem}.incidence")
        edges_path = _output_path(f"{stem}.edges")
        write_incidence(incidence, incidence_path)
        write_edge_list(graph, edges_path)
        print(f"💾 Saved {graph.edge_count} edges to {edges_path}")

        result = {
            "success": True,
            "n": n,
            "m": m,
            "p": p,
            "seed": seed,
            "edges_only": incidence.edges_only,
            "edges": graph.edge_count,
            "total_memberships": incidence.total_memberships,
            "moments": vars(moments),
            "incidence_path": str(incidence_path),
            "edge_list_path": str(edges_path),
        }
        return json.dumps(result, indent=2)

    except Exception as e:
        return _error(e)


# ==================== Modularity Tools ====================

@mcp.tool()
def score_partition(graph_path: str, partition: Optional[List[int]] = None,
                    partition_path: Optional[str] = None) -> str:
    """
    Modularity score of a partition, with per-block edge and volume fractions.

    Args:
        graph_path: Edge list or incidence file
        partition: Block index per vertex
        partition_path: File holding one comma-separated line of block indices (used when partition is omitted)

    Returns:
        JSON string with the score and per-block terms
    """
    try:
        graph = load_graph(graph_path)
        if partition is not None:
            blocks = Partition.from_labels(partition)
        elif partition_path:
            blocks = parse_partition(_read(partition_path))
        else:
            return json.dumps({"success": False, "error": "Provide partition or partition_path"}, indent=2)
        report = modularity_engine.score(graph, blocks)
        return json.dumps({"success": True, **report.as_dict()}, indent=2)

    except Exception as e:
        return _error(e)


@mcp.tool()
def exact_modularity(graph_path: str, max_n: Optional[int] = None, k: Optional[int] = None) -> str:
    """
    Exact modularity by exhaustive search over partitions (small graphs only).

    Args:
        graph_path: Edge list or incidence file
        max_n: Vertex limit (RIGMOD_EXACT_MAX_N by default)
        k: Also report the best partition with at most k blocks and the k/(k-1) sandwich

    Returns:
        JSON string with the maximizing partition and its score
    """
    try:
        graph = load_graph(graph_path)
        report = modularity_engine.exact_modularity(graph, max_n=max_n)
        result = {"success": True, **report.as_dict()}
        if k is not None:
            restricted = modularity_engine.best_restricted(graph, k)
            result["restricted"] = restricted.as_dict()
            if k >= 2:
                result["restricted_upper"] = k / (k - 1) * restricted.score
        return json.dumps(result, indent=2)

    except Exception as e:
        return _error(e)


@mcp.tool()
def louvain_modularity(graph_path: str, seed: Optional[int] = None, levels: int = 20) -> str:
    """
    Louvain heuristic modularity (a lower bound on the true modularity).

    Args:
        graph_path: Edge list or incidence file
        seed: Seed of the vertex sweep order (index order when omitted)
        levels: Aggregation level cap

    Returns:
        JSON string with the partition found and its score
    """
    try:
        graph = load_graph(graph_path)
        report = modularity_engine.louvain(graph, seed=seed, levels=levels)
        return json.dumps({"success": True, **report.as_dict()}, indent=2)

    except Exception as e:
        return _error(e)


# ==================== Structure Tools ====================

@mcp.tool()
def incidence_stats(incidence_path: str, subset: Optional[List[int]] = None, p: Optional[float] = None,
                    epsilon: float = 0.3, k_max: int = 10, truncation: int = 6) -> str:
    """
    Clique-cover statistics of an incidence: clique sizes, E1, E2 and subset bounds.

    Args:
        incidence_path: Incidence file
        subset: Vertex subset S for intersection counts and clique-cover bounds
        p: Sampling probability, enables the concentration diagnostics for S
        epsilon: Relative tolerance of the diagnostics
        k_max: Largest multiple of np inspected for large cliques
        truncation: Clique-size threshold A of E2

    Returns:
        JSON string with the statistics
    """
    try:
        incidence = load_incidence(incidence_path)
        sizes = incidence.sizes
        result = {
            "success": True,
            "n": incidence.n,
            "m": incidence.m,
            "edges_only": incidence.edges_only,
            "stored_attributes": incidence.stored_count,
            "max_clique_size": int(sizes.max()) if len(sizes) else 0,
            "e1": structure_stats.e1_count(incidence),
            "excess_coverage": structure_stats.excess_coverage(incidence),
            "e2": structure_stats.e2_count(incidence, truncation),
        }
        if not incidence.edges_only:
            stats = structure_stats.attribute_stats(incidence)
            result["exclusive_sizes"] = stats.exclusive_sizes.tolist()
        if p is not None:
            result["e1_upper_bound"] = structure_stats.e1_upper_bound(incidence.n, incidence.m, p)
        if subset is not None:
            counts = structure_stats.subset_counts(incidence, subset)
            result["x"] = counts.x.tolist()
            result["y"] = counts.y.tolist()
            result["bounds"] = vars(structure_stats.clique_bounds(incidence, subset))
            if p is not None:
                diagnostics = structure_stats.regime_diagnostics(incidence, subset, p, epsilon, k_max)
                result["diagnostics"] = {
                    "M_S": diagnostics.M_S,
                    "concentrated": diagnostics.concentrated,
                    "N_k": dict(zip(diagnostics.k_values, diagnostics.N_k)),
                }
        return json.dumps(result, indent=2)

    except Exception as e:
        return _error(e)


@mcp.tool()
def attribute_partition(incidence_path: str, p: float, epsilon: float = 0.3,
                        mode: str = constructions.THEOREM_THRESHOLD) -> str:
    """
    Build the exclusive-attribute partition of an incidence and score it on the projection.

    Args:
        incidence_path: Full incidence file (not edges_only)
        p: Sampling probability of the incidence
        epsilon: Tolerance in (0, 1)
        mode: theorem_threshold or nonempty_exclusive

    Returns:
        JSON string with the partition score and the candidate lower bounds
    """
    try:
        incidence = load_incidence(incidence_path)
        params = RigParams(n=incidence.n, m=incidence.m, p=p)
        config = constructions.AttrPartitionConfig(epsilon=epsilon, mode=mode)
        partition = constructions.build_attribute_partition(incidence, params, config)
        selected = constructions.select_attributes(structure_stats.attribute_stats(incidence), params, config)
        report = modularity_engine.score(project(incidence), partition, method="attribute")
        result = {
            "success": True,
            **report.as_dict(),
            "selected_attributes": len(selected),
            "bounds": vars(constructions.theorem1_bounds(incidence.m, p, epsilon)),
            "admissible": constructions.theorem1_admissible(incidence.n, incidence.m, p, epsilon),
        }
        return json.dumps(result, indent=2)

    except Exception as e:
        return _error(e)


@mcp.tool()
def couple_graphs(n: int, m: int, p: float, seed: int = 0, delta_exponent: float = 0.1, reps: int = 1) -> str:
    """
    Couple G(n, m, p) with its thinned graph G_hat and the matched Erdos-Renyi model.

    Args:
        n: Number of vertices (np < 1)
        m: Number of attributes
        p: Membership probability
        seed: Master seed
        delta_exponent: Slack exponent of the gap threshold m (np)^(3 - delta)
        reps: Number of replications

    Returns:
        JSON string with q_hat, p_bar and the coupling gap summary
    """
    try:
        matched = constructions.matched_er_probability(n, m, p)
        summary = constructions.coupling_gap_check(n, m, p, delta_exponent, reps, seed)
        result = {
            "success": True,
            "q_hat": matched.q_hat,
            "p_bar": matched.p_bar,
            **vars(summary),
        }
        return json.dumps(result, indent=2)

    except Exception as e:
        return _error(e)


# ==================== Experiment Tools ====================

@mcp.tool()
def run_sweep(regime: str = "custom", preset: Optional[str] = None, grid: Optional[List[List[float]]] = None,
              reps: Optional[int] = None, seed: int = 0, output: Optional[str] = None,
              epsilon: Optional[float] = None, record_timings: bool = False) -> str:
    """
    Run a seeded parameter sweep and write its CSV to the data directory.

    Args:
        regime: cor1, cor2, thm2, thm3, thm4 or custom (ignored when preset is given)
        preset: cor1-strong, cor1-moderate, thm2, thm3, thm4 or cor2
        grid: List of [n, m, p] points (overrides the preset grid)
        reps: Replications per grid point
        seed: Master seed
        output: CSV file name (default sweep_<regime>_<seed>.csv)
        epsilon: Attribute-partition tolerance
        record_timings: Include the runtime_ms column

    Returns:
        JSON string with the CSV path and per-grid-point means
    """
    try:
        overrides = {
            "grid": [tuple(point) for point in grid] if grid else None,
            "reps": reps,
            "master_seed": seed,
            "epsilon": epsilon,
            "record_timings": record_timings,
        }
        if preset:
            config = experiment_harness.preset_config(preset, **overrides)
        else:
            if not grid:
                return json.dumps({"success": False, "error": "Provide a preset or a grid"}, indent=2)
            config = experiment_harness.SweepConfig(regime=regime, **{k: v for k, v in overrides.items() if v is not None})
        path = _output_path(output or f"sweep_{config.regime}_{seed}.csv")
        rows = experiment_harness.run_sweep(config)
        experiment_harness.write_sweep_csv(rows, path, config.record_timings)
        summary = reporting.report(rows, ["n", "m", "p"])
        result = {
            "success": True,
            "regime": config.regime,
            "rows": len(rows),
            "csv_path": str(path),
            "groups": [
                {
                    "n_m_p": list(group.key),
                    "louvain_mod_mean": group.columns["louvain_mod"].mean if "louvain_mod" in group.columns else None,
                    "proof_bound": group.columns["proof_bound"].mean if "proof_bound" in group.columns else None,
                }
                for group in summary.groups
            ],
        }
        return json.dumps(result, indent=2)

    except Exception as e:
        return _error(e)


@mcp.tool()
def summarize_sweep(csv_path: str, group_by: List[str], svg: Optional[str] = None, x: Optional[str] = None,
                    y: Optional[str] = None) -> str:
    """
    Aggregate a sweep CSV per group (mean, std, median, min, max) and optionally chart y against x.

    Args:
        csv_path: Sweep CSV written by run_sweep
        group_by: Columns defining the groups
        svg: SVG file name for the chart
        x: Chart x column
        y: Chart y column

    Returns:
        JSON string with the per-group statistics
    """
    try:
        resolved = resolve_file_path(csv_path)
        if resolved is None:
            return json.dumps({"success": False, "error": f"File not found at {csv_path}"}, indent=2)
        rows = reporting.read_sweep_csv(resolved)
        summary = reporting.report(rows, group_by, svg_path=_output_path(svg) if svg else None, x=x, y=y)
        return json.dumps({"success": True, **summary.as_dict()}, indent=2)

    except Exception as e:
        return _error(e)


@mcp.tool()
def verify_invariants(seed: int = 0) -> str:
    """
    Run the self-check suite on randomized small instances.

    Args:
        seed: Master seed of the instances

    Returns:
        JSON string with one verdict per check
    """
    try:
        results = verification.run_checks(seed)
        result = {
            "success": all(r.passed for r in results),
            "seed": seed,
            "checks": [vars(r) for r in results],
        }
        return json.dumps(result, indent=2)

    except Exception as e:
        return _error(e)


# ==================== Utility Tools ====================

@mcp.tool()
def get_status() -> str:
    """
    Get server configuration and the files in the data directory.

    Returns:
        JSON string with system status
    """
    try:
        result = {
            "success": True,
            "data_dir": str(DATA_DIR),
            "workers": get_worker_count(),
            "membership_cap": get_membership_cap(),
            "exact_max_n": get_exact_max_n(),
            "presets": sorted(experiment_harness.PRESETS),
            "files": sorted(p.name for p in DATA_DIR.iterdir() if p.is_file()),
            "supported_formats": {
                "graphs": ["edges", "incidence"],
                "sweeps": ["csv"],
                "charts": ["svg"]
            }
        }
        return json.dumps(result, indent=2)

    except Exception as e:
        return _error(e)


# Run the server
if __name__ == "__main__":
    print("🎉 rigmod MCP Server is ready!")
    print(f"⚙️  Workers: {get_worker_count()}, exact search up to n = {get_exact_max_n()}")
    print(f"💾 Data directory: {DATA_DIR}")
    mcp.run()
