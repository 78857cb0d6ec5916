"""
Self-check suite run by `cli.py verify`

Every check draws small random instances from the stream
(seed, check_index) and compares the engines against identities that
hold for every graph, so verdicts do not depend on the seed.
"""
import math
import sys
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, TextIO, Tuple

import numpy as np

from rigmod.constructions import NONEMPTY_EXCLUSIVE, AttrPartitionConfig, build_attribute_partition, \
    couple_hat, matched_er_probability
from rigmod.graph_core import Graph, Incidence, RigParams, project, sample_er, sample_incidence
from rigmod.modularity_engine import TOLERANCE, Partition, best_restricted, complement_check, \
    exact_modularity, large_side_deviation, louvain, score
from rigmod.seeding import make_rng
from rigmod.structure_stats import attribute_stats, clique_bounds, e1_count, excess_coverage, subset_counts

Scorer = Callable[[Graph, Partition], float]
INSTANCES = 40


def default_scorer(graph: Graph, partition: Partition) -> float:
    return score(graph, partition).score


@dataclass
class CheckResult:
    name: str
    instances: int
    passed: bool
    detail: str = ""


class CheckFailed(Exception):
    pass


def _expect(condition: bool, message: str):
    if not condition:
        raise CheckFailed(message)


# ==================== Instances ====================

def _random_incidence(rng: np.random.Generator, n: int) -> Tuple[RigParams, Incidence]:
    params = RigParams(n=n, m=int(rng.integers(2, 7)), p=float(rng.choice([0.25, 0.4, 0.6])),
                       seed=int(rng.integers(0, 2 ** 63)))
    return params, sample_incidence(params)


def _random_graphs(rng: np.random.Generator, count: int, low: int = 4, high: int = 9) -> Iterator[Graph]:
    """Alternate G(n, 1/2) and projected G(n, m, p) samples, skipping edgeless draws"""
    produced = 0
    while produced < count:
        n = int(rng.integers(low, high + 1))
        if produced % 2 == 0:
            graph = sample_er(n, 0.5, rng)
        else:
            graph = project(_random_incidence(rng, n)[1])
        if graph.edge_count:
            produced += 1
            yield graph


def _random_subset(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.random(n) < 0.5


def _random_partition(rng: np.random.Generator, n: int) -> Partition:
    return Partition.from_labels(rng.integers(0, max(1, n // 2), size=n))


def _reference_score(graph: Graph, partition: Partition) -> float:
    edges = graph.edges()
    degree = [0] * graph.n
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    total = 0.0
    for block in partition.blocks():
        members = set(block)
        internal = sum(1 for u, v in edges if u in members and v in members)
        volume = sum(degree[v] for v in block)
        total += internal / len(edges) - (volume / (2 * len(edges))) ** 2
    return total


# ==================== Checks ====================

def check_scorer_reference(rng, scorer: Scorer):
    for graph in _random_graphs(rng, INSTANCES):
        partition = _random_partition(rng, graph.n)
        got, want = scorer(graph, partition), _reference_score(graph, partition)
        _expect(abs(got - want) <= 1e-9, f"score {got} differs from direct count {want}")
        _expect(-0.5 - TOLERANCE <= got < 1.0, f"score {got} outside [-1/2, 1)")


def check_trivial_and_singletons(rng, scorer: Scorer):
    for graph in _random_graphs(rng, INSTANCES):
        trivial = scorer(graph, Partition.trivial(graph.n))
        _expect(abs(trivial) <= TOLERANCE, f"single-block score {trivial} is not 0")
        singletons = scorer(graph, Partition.from_labels(np.arange(graph.n)))
        expected = -sum((d / graph.volume) ** 2 for d in graph.degrees.tolist())
        _expect(abs(singletons - expected) <= TOLERANCE, f"singleton score {singletons} != {expected}")


def check_complement_symmetry(rng, scorer: Scorer):
    for graph in _random_graphs(rng, INSTANCES, high=12):
        mask = _random_subset(rng, graph.n)
        inside, outside = complement_check(graph, mask)
        _expect(abs(inside - outside) <= TOLERANCE, f"deviation(S)={inside} but deviation(S^c)={outside}")
        e_s = int(np.count_nonzero(mask[graph.heads] & mask[graph.tails]))
        cross = int(np.count_nonzero(mask[graph.heads] != mask[graph.tails]))
        _expect(int(graph.degrees[mask].sum()) == 2 * e_s + cross, "vol(S) != 2 e(S) + e(S, S^c)")


def check_exact_sandwich(rng, scorer: Scorer):
    for graph in _random_graphs(rng, INSTANCES // 2):
        exact = exact_modularity(graph).score
        _expect(0.0 - TOLERANCE <= exact < 1.0, f"exact modularity {exact} outside [0, 1)")
        for k in (2, 3):
            restricted = best_restricted(graph, k).score
            _expect(restricted <= exact + TOLERANCE, f"best_restricted({k})={restricted} > exact {exact}")
            _expect(exact <= k / (k - 1) * restricted + TOLERANCE,
                    f"exact {exact} above {k}/{k - 1} x best_restricted({k})={restricted}")
        large_side, _ = large_side_deviation(graph)
        _expect(exact <= 4.0 * large_side + TOLERANCE, f"exact {exact} above 4 x large-side deviation")


def check_louvain_soundness(rng, scorer: Scorer):
    triangles = Graph.from_pairs(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])
    found = louvain(triangles)
    value = scorer(triangles, found.partition)
    _expect(abs(value - 0.5) <= TOLERANCE, f"two triangles scored {value}, expected 1/2")
    for graph in _random_graphs(rng, INSTANCES // 2):
        found = louvain(graph)
        value = scorer(graph, found.partition)
        exact = exact_modularity(graph).score
        _expect(-TOLERANCE <= value <= exact + TOLERANCE, f"louvain {value} outside [0, exact={exact}]")


def check_projection_counts(rng, scorer: Scorer):
    for _ in range(INSTANCES):
        n = int(rng.integers(3, 13))
        _, incidence = _random_incidence(rng, n)
        graph = project(incidence)
        expected = set()
        for members in incidence.member_lists():
            expected.update((u, v) for i, u in enumerate(members) for v in members[i + 1:])
        _expect(graph.edges() == expected, "projection differs from the union of attribute cliques")
        sizes = incidence.sizes.astype(np.int64)
        covered = int((sizes * (sizes - 1) // 2).sum())
        surplus = excess_coverage(incidence)
        _expect(covered - surplus == graph.edge_count, "sum of C(V_i, 2) minus surplus != e(G)")
        _expect(e1_count(incidence) <= surplus, "E1 exceeds the surplus coverage")


def check_clique_bounds(rng, scorer: Scorer):
    for _ in range(INSTANCES):
        n = int(rng.integers(3, 13))
        _, incidence = _random_incidence(rng, n)
        graph = project(incidence)
        mask = _random_subset(rng, n)
        counts = subset_counts(incidence, mask)
        _expect(bool(np.all(counts.x + counts.y == incidence.sizes)), "X + Y != V_i")
        bounds = clique_bounds(incidence, mask)
        e_s = int(np.count_nonzero(mask[graph.heads] & mask[graph.tails]))
        cross = int(np.count_nonzero(mask[graph.heads] != mask[graph.tails]))
        volume = int(graph.degrees[mask].sum())
        _expect(bounds.eS_upper >= e_s, f"eS_upper {bounds.eS_upper} < e(S) {e_s}")
        _expect(bounds.eSbar_cross_lower <= cross, f"cross lower bound {bounds.eSbar_cross_lower} > {cross}")
        _expect(bounds.vol_lower <= volume, f"volume lower bound {bounds.vol_lower} > {volume}")


def check_attribute_partition(rng, scorer: Scorer):
    config = AttrPartitionConfig(epsilon=0.3, mode=NONEMPTY_EXCLUSIVE)
    for _ in range(INSTANCES):
        n = int(rng.integers(3, 13))
        params, incidence = _random_incidence(rng, n)
        partition = build_attribute_partition(incidence, params, config)
        _expect(partition.n == n, "attribute partition does not cover V")
        counts = incidence.vertex_attrs
        stats = attribute_stats(incidence)
        for members in stats.exclusive_lists():
            _expect(all(counts[v] == 1 for v in members), "exclusive member holds another attribute")
        graph = project(incidence)
        if graph.edge_count and n <= 9:
            value = scorer(graph, partition)
            _expect(value <= exact_modularity(graph).score + TOLERANCE,
                    "attribute partition beats the exact modularity")


def check_coupling(rng, scorer: Scorer):
    for _ in range(INSTANCES):
        n = int(rng.integers(3, 13))
        _, incidence = _random_incidence(rng, n)
        coupling = couple_hat(incidence, rng)
        _expect(coupling.g_hat.edges() <= coupling.g.edges(), "G_hat is not a subgraph of G")
        _expect(coupling.delta >= 0, "negative coupling gap")
        _expect(coupling.g_hat.edge_count <= int(np.count_nonzero(incidence.sizes >= 2)),
                "G_hat keeps more than one pair per clique")
        p = float(rng.uniform(0.0, 1.0))
        matched = matched_er_probability(n, incidence.m, p)
        q_hat = 1.0 - (1.0 - p) ** n - n * p * (1.0 - p) ** (n - 1)
        _expect(math.isclose(matched.q_hat, q_hat, rel_tol=1e-9, abs_tol=1e-12), "q_hat mismatch")
        _expect(0.0 <= matched.p_bar <= 1.0, f"p_bar {matched.p_bar} outside [0, 1]")


CHECKS: List[Tuple[str, Callable]] = [
    ("scorer matches direct count", check_scorer_reference),
    ("trivial and singleton scores", check_trivial_and_singletons),
    ("complement symmetry", check_complement_symmetry),
    ("exact oracle sandwich", check_exact_sandwich),
    ("louvain soundness", check_louvain_soundness),
    ("projection and coverage", check_projection_counts),
    ("clique-cover bounds", check_clique_bounds),
    ("exclusive-attribute partition", check_attribute_partition),
    ("coupling containment", check_coupling),
]


def run_checks(seed: int = 0, scorer: Optional[Scorer] = None) -> List[CheckResult]:
    """
    Run every check on its own stream

    Args:
        seed: master seed of the instance streams
        scorer: replacement for the partition scorer, used to confirm a broken scorer is caught

    Returns:
        List[CheckResult]: one verdict per check, in CHECKS order
    """
    scorer = scorer or default_scorer
    results = []
    for index, (name, check) in enumerate(CHECKS):
        try:
            check(make_rng(seed, index), scorer)
            results.append(CheckResult(name=name, instances=INSTANCES, passed=True))
        except Exception as e:
            results.append(CheckResult(name=name, instances=INSTANCES, passed=False,
                                       detail=f"{type(e).__name__}: {e}"))
    return results


def format_table(results: List[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(width)}  status  detail"]
    for r in results:
        lines.append(f"{r.name.ljust(width)}  {'PASS' if r.passed else 'FAIL':6}  {r.detail}".rstrip())
    return "\n".join(lines) + "\n"


def verify(seed: int = 0, scorer: Optional[Scorer] = None, stream: Optional[TextIO] = None) -> int:
    """
    Print the pass/fail table and return the exit status

    Returns:
        int: 0 when every check passes, 1 otherwise
    """
    results = run_checks(seed, scorer)
    (stream or sys.stdout).write(format_table(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"❌ {len(failed)} of {len(results)} checks failed", file=sys.stderr)
        return 1
    print(f"✅ All {len(results)} checks passed (seed {seed})", file=sys.stderr)
    return 0
