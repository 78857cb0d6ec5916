#!/usr/bin/env python3
"""
rigmod command line

Results go to stdout as key=value lines or CSV; status lines go to stderr.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from dotenv import load_dotenv

from rigmod import constructions, experiment_harness, modularity_engine, reporting, structure_stats, verification
from rigmod.errors import FormatError, InvalidParameters, RigModError
from rigmod.formats import format_edge_list, format_partition, parse_edge_list, read_incidence, read_partition, \
    write_edge_list, write_incidence, write_partition
from rigmod.graph_core import Graph, RigParams, model_moments, project, sample_incidence, sample_incidence_sparse


def _emit(lines: Sequence[str]):
    sys.stdout.write("".join(f"{line}\n" for line in lines))


def _load_graph(path: str) -> Graph:
    """Edge list, or incidence projected on the fly"""
    text = Path(path).read_text(encoding="utf-8")
    header = next((line.split() for line in text.splitlines() if line.strip()), [])
    if len(header) >= 4 and header[2] == "m":
        return project(read_incidence(path))
    return parse_edge_list(text)


def _parse_subset(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    try:
        return [int(token) for token in text.split(",") if token.strip()]
    except ValueError as e:
        raise FormatError(f"subset must be comma-separated vertex indices: {e}")


def read_grid(path: str) -> List[Tuple[int, int, float]]:
    """Grid file: one 'n m p' (or 'n,m,p') point per line, # comments allowed"""
    points = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise FormatError(f"grid line must hold n m p, got {line!r}")
        try:
            points.append((int(tokens[0]), int(float(tokens[1])), float(tokens[2])))
        except ValueError as e:
            raise FormatError(f"bad grid line {line!r}: {e}")
    return points


# ==================== Subcommands ====================

def cmd_generate(args) -> int:
    params = RigParams(n=args.n, m=args.m, p=args.p, seed=args.seed)
    if args.sparse or args.edges_only:
        incidence = sample_incidence_sparse(params, edges_only=args.edges_only)
    else:
        incidence = sample_incidence(params)
    graph = project(incidence)
    moments = model_moments(args.n, args.m, args.p)
    if args.incidence_out:
        write_incidence(incidence, args.incidence_out)
        print(f"💾 Incidence written to {args.incidence_out}", file=sys.stderr)
    if args.edges_out:
        write_edge_list(graph, args.edges_out)
        print(f"💾 Edge list written to {args.edges_out}", file=sys.stderr)
    _emit([
        f"edges={graph.edge_count}",
        f"memberships={incidence.total_memberships}",
        f"edges_only={str(incidence.edges_only).lower()}",
        f"p_hat={moments.p_hat:.12g}",
        f"d={moments.d:.12g}",
        f"expected_edges={moments.expected_edges:.12g}",
    ])
    if not (args.incidence_out or args.edges_out):
        sys.stdout.write(format_edge_list(graph))
    return 0


def _emit_report(report: modularity_engine.ModularityReport, blocks: bool, partition_out: Optional[str]):
    _emit(report.key_value_lines())
    if blocks:
        sys.stdout.write(report.blocks_csv())
    if partition_out:
        write_partition(report.partition, partition_out)
    else:
        sys.stdout.write("partition=" + format_partition(report.partition))


def cmd_score(args) -> int:
    graph = _load_graph(args.graph)
    report = modularity_engine.score(graph, read_partition(args.partition))
    _emit(report.key_value_lines())
    sys.stdout.write(report.blocks_csv())
    return 0


def cmd_exact(args) -> int:
    graph = _load_graph(args.graph)
    report = modularity_engine.exact_modularity(graph, max_n=args.max_n)
    _emit_report(report, args.blocks, args.partition_out)
    if args.k is not None:
        restricted = modularity_engine.best_restricted(graph, args.k)
        _emit([f"restricted_k={args.k}", f"restricted_score={restricted.score:.12g}"])
        if args.k >= 2:
            _emit([f"restricted_upper={args.k / (args.k - 1) * restricted.score:.12g}"])
    return 0


def cmd_louvain(args) -> int:
    graph = _load_graph(args.graph)
    report = modularity_engine.louvain(graph, seed=args.seed, levels=args.levels)
    _emit_report(report, args.blocks, args.partition_out)
    return 0


def cmd_stats(args) -> int:
    incidence = read_incidence(args.incidence)
    lines = [
        f"n={incidence.n}",
        f"m={incidence.m}",
        f"stored_attributes={incidence.stored_count}",
        f"e1={structure_stats.e1_count(incidence)}",
        f"excess_coverage={structure_stats.excess_coverage(incidence)}",
        f"e2={structure_stats.e2_count(incidence, args.truncation)}",
    ]
    if not incidence.edges_only:
        stats = structure_stats.attribute_stats(incidence)
        lines.append("sizes=" + ",".join(str(v) for v in stats.sizes.tolist()))
        lines.append("exclusive_sizes=" + ",".join(str(v) for v in stats.exclusive_sizes.tolist()))
    if args.p is not None:
        lines.append(f"e1_upper_bound={structure_stats.e1_upper_bound(incidence.n, incidence.m, args.p):.12g}")
    subset = _parse_subset(args.subset)
    if subset is not None:
        bounds = structure_stats.clique_bounds(incidence, subset)
        lines.extend(f"{key}={value}" for key, value in vars(bounds).items())
        if args.p is not None:
            diagnostics = structure_stats.regime_diagnostics(incidence, subset, args.p, args.epsilon, args.k_max)
            lines.append(f"M_S={diagnostics.M_S}")
            lines.append(f"concentrated={diagnostics.concentrated}")
            lines.extend(f"N_{k}={count}" for k, count in zip(diagnostics.k_values, diagnostics.N_k))
    _emit(lines)
    return 0


def cmd_attr_partition(args) -> int:
    incidence = read_incidence(args.incidence)
    params = RigParams(n=incidence.n, m=incidence.m, p=args.p)
    config = constructions.AttrPartitionConfig(epsilon=args.epsilon, mode=args.mode)
    partition = constructions.build_attribute_partition(incidence, params, config)
    graph = project(incidence)
    bounds = constructions.theorem1_bounds(incidence.m, args.p, args.epsilon)
    if graph.edge_count:
        _emit(modularity_engine.score(graph, partition, method="attribute").key_value_lines())
    else:
        _emit([f"blocks={partition.block_count}"])
    admissible = constructions.theorem1_admissible(incidence.n, incidence.m, args.p, args.epsilon)
    _emit([
        f"bound_stated={bounds.stated:.12g}",
        f"bound_proof_level={bounds.proof_level:.12g}",
        f"a_eps={bounds.a_eps:.12g}",
        f"admissible={str(admissible).lower()}",
    ])
    if args.out:
        write_partition(partition, args.out)
    else:
        sys.stdout.write("partition=" + format_partition(partition))
    return 0


def cmd_couple(args) -> int:
    if args.incidence:
        coupling = constructions.couple_hat(read_incidence(args.incidence), args.seed)
        _emit([f"edges={coupling.g.edge_count}", f"edges_hat={coupling.g_hat.edge_count}",
               f"delta={coupling.delta}"])
        for graph, path, label in ((coupling.g, args.g_out, "G"), (coupling.g_hat, args.g_hat_out, "G_hat")):
            if path:
                write_edge_list(graph, path)
                print(f"💾 {label} written to {path}", file=sys.stderr)
            else:
                sys.stdout.write(f"# {label}\n" + format_edge_list(graph))
        return 0
    if args.n is None or args.m is None or args.p is None:
        raise InvalidParameters("couple needs --incidence or all of --n, --m and --p")
    matched = constructions.matched_er_probability(args.n, args.m, args.p)
    summary = constructions.coupling_gap_check(args.n, args.m, args.p, args.delta, args.reps, args.seed)
    _emit([
        f"q_hat={matched.q_hat:.12g}",
        f"p_bar={matched.p_bar:.12g}",
        f"threshold={summary.threshold:.12g}",
        f"fraction_within_bound={summary.fraction_within_bound:.12g}",
        f"containment_holds={str(summary.containment_holds).lower()}",
        "deltas=" + ",".join(str(d) for d in summary.deltas),
    ])
    return 0


def build_sweep_config(args) -> experiment_harness.SweepConfig:
    grid = None
    if args.grid:
        grid = read_grid(args.grid)
    elif args.point:
        grid = [(int(n), int(float(m)), float(p)) for n, m, p in args.point]
    overrides = {
        "grid": grid,
        "reps": args.reps,
        "master_seed": args.seed,
        "epsilon": args.epsilon,
        "bound_epsilon": args.bound_epsilon,
        "partition_mode": args.mode,
        "record_timings": args.timings,
        "workers": args.workers,
        "output": args.out,
    }
    if args.preset:
        return experiment_harness.preset_config(args.preset, **overrides)
    if grid is None:
        raise InvalidParameters("sweep needs --preset, --grid or at least one --point")
    return experiment_harness.SweepConfig(regime=args.regime, **{k: v for k, v in overrides.items() if v is not None})


def cmd_sweep(args) -> int:
    config = build_sweep_config(args)
    rows = experiment_harness.run_sweep(config)
    if not config.output:
        sys.stdout.write(experiment_harness.rows_to_csv(rows, config.record_timings))
    return 0


def cmd_report(args) -> int:
    rows = reporting.read_sweep_csv(args.input)
    group_by = [c.strip() for c in args.group_by.split(",") if c.strip()]
    summary = reporting.report(rows, group_by, svg_path=args.svg, x=args.x, y=args.y)
    text = summary.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"💾 Summary written to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(args) -> int:
    return verification.verify(args.seed)


# ==================== Parser ====================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rigmod", description="Random intersection graph modularity lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample G(n, m, p)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sparse", action="store_true", help="draw clique sizes first")
    p.add_argument("--edges-only", action="store_true", help="keep only attributes with two or more members")
    p.add_argument("--incidence-out")
    p.add_argument("--edges-out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="score a partition")
    p.add_argument("--graph", required=True, help="edge list or incidence file")
    p.add_argument("--partition", required=True, help="file with one line of block indices")
    p.set_defaults(func=cmd_score)

    for name, func, help_text in (("exact", cmd_exact, "exhaustive modularity"),
                                  ("louvain", cmd_louvain, "Louvain heuristic")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--graph", required=True, help="edge list or incidence file")
        p.add_argument("--blocks", action="store_true", help="print per-block terms as CSV")
        p.add_argument("--partition-out")
        if name == "exact":
            p.add_argument("--max-n", type=int)
            p.add_argument("--k", type=int, help="also report the best partition with at most k blocks")
        else:
            p.add_argument("--seed", type=int)
            p.add_argument("--levels", type=int, default=modularity_engine.DEFAULT_LEVELS)
        p.set_defaults(func=func)

    p = sub.add_parser("stats", help="clique-cover statistics of an incidence")
    p.add_argument("--incidence", required=True)
    p.add_argument("--subset", help="comma-separated vertices of S")
    p.add_argument("--p", type=float, help="sampling probability, enables the diagnostics")
    p.add_argument("--epsilon", type=float, default=0.3)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--truncation", type=int, default=structure_stats.DEFAULT_TRUNCATION)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("attr-partition", help="exclusive-attribute partition")
    p.add_argument("--incidence", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=0.3)
    p.add_argument("--mode", choices=constructions.PARTITION_MODES, default=constructions.THEOREM_THRESHOLD)
    p.add_argument("--out", help="write the partition here")
    p.set_defaults(func=cmd_attr_partition)

    p = sub.add_parser("couple", help="thinned coupling G_hat of G and the coupling gap")
    p.add_argument("--incidence", help="couple this incidence and print G, G_hat and delta")
    p.add_argument("--g-out")
    p.add_argument("--g-hat-out")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta", type=float, default=experiment_harness.DEFAULT_DELTA)
    p.add_argument("--reps", type=int, default=1)
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("sweep", help="seeded parameter sweep")
    p.add_argument("--regime", choices=experiment_harness.REGIMES, default="custom")
    p.add_argument("--preset", choices=sorted(experiment_harness.PRESETS))
    p.add_argument("--grid", help="file with one 'n m p' point per line")
    p.add_argument("--point", nargs=3, action="append", metavar=("N", "M", "P"))
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--bound-epsilon", type=float, help="epsilon of the cor1 proof_bound (default 0)")
    p.add_argument("--mode", choices=constructions.PARTITION_MODES)
    p.add_argument("--timings", action="store_true", help="include runtime_ms")
    p.add_argument("--workers", type=int, help="pool size (RIGMOD_THREADS by default)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate a sweep CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--group-by", required=True, help="comma-separated columns")
    p.add_argument("--svg")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("verify", help="run the self-check suite")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RigModError, OSError) as e:
        print(f"error={e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
