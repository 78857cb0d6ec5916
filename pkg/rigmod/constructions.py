"""
Proof constructions: the exclusive-attribute partition, the thinned
coupling G_hat of G, and the matched Erdos-Renyi model
"""
import math
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.stats import binom

from rigmod.errors import InvalidParameters
from rigmod.graph_core import Graph, Incidence, RigParams, project, sample_er, sample_incidence_sparse
from rigmod.modularity_engine import Partition
from rigmod.seeding import SeedLike, as_generator, derive_seed, make_rng
from rigmod.structure_stats import AttributeStats, attribute_stats

THEOREM_THRESHOLD = "theorem_threshold"
NONEMPTY_EXCLUSIVE = "nonempty_exclusive"
PARTITION_MODES = (THEOREM_THRESHOLD, NONEMPTY_EXCLUSIVE)


@dataclass(frozen=True)
class AttrPartitionConfig:
    epsilon: float = 0.3
    mode: str = THEOREM_THRESHOLD

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidParameters(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.mode not in PARTITION_MODES:
            raise InvalidParameters(f"mode must be one of {PARTITION_MODES}, got {self.mode!r}")

    @property
    def a_eps(self) -> float:
        return admissibility_constant(self.epsilon)


@dataclass(frozen=True, eq=False)
class CouplingResult:
    g: Graph
    g_hat: Graph
    delta: int


@dataclass(frozen=True)
class Theorem1Bounds:
    stated: float
    proof_level: float
    a_eps: float


@dataclass(frozen=True)
class MatchedER:
    q_hat: float
    p_bar: float


@dataclass(frozen=True)
class CouplingGapSummary:
    fraction_within_bound: float
    threshold: float
    deltas: List[int]
    containment_holds: bool


def admissibility_constant(epsilon: float) -> float:
    """A_eps = 3 eps^-2 ln(4 / eps^2)"""
    return 3.0 / epsilon ** 2 * math.log(4.0 / epsilon ** 2)


# ==================== Exclusive-attribute partition ====================

def select_attributes(stats: AttributeStats, params: RigParams, config: AttrPartitionConfig) -> np.ndarray:
    """
    Attribute positions whose exclusive sets become blocks

    theorem_threshold keeps i when |V~_i| is within epsilon of
    n p e^{-mp} and V_i within epsilon of n p; nonempty_exclusive keeps
    i when |V~_i| >= 2.
    """
    exclusive = stats.exclusive_sizes
    if config.mode == NONEMPTY_EXCLUSIVE:
        return np.flatnonzero(exclusive >= 2)
    eps = config.epsilon
    clique_mean = params.n * params.p
    exclusive_mean = clique_mean * math.exp(-params.m * params.p)
    keep = (np.abs(exclusive - exclusive_mean) <= eps * exclusive_mean) & \
           (np.abs(stats.sizes - clique_mean) <= eps * clique_mean)
    return np.flatnonzero(keep)


def build_attribute_partition(incidence: Incidence, params: RigParams,
                              config: AttrPartitionConfig) -> Partition:
    """
    Partition V into the exclusive sets of the selected attributes plus a remainder

    Args:
        incidence: a full incidence (not edges_only)
        params: parameters the incidence was sampled with
        config: tolerance and selection mode

    Returns:
        Partition: nonempty exclusive blocks, remainder block last when nonempty
    """
    stats = attribute_stats(incidence)
    selected = select_attributes(stats, params, config)
    labels = np.full(incidence.n, -1, dtype=np.int64)
    for block, position in enumerate(selected.tolist()):
        members = stats.exclusive(position)
        if np.any(labels[members] >= 0):
            raise RuntimeError(f"exclusive set of attribute {position} overlaps an earlier block")
        labels[members] = block
    labels[labels < 0] = len(selected)
    return Partition.from_labels(labels)


def theorem1_bounds(m: int, p: float, epsilon: float) -> Theorem1Bounds:
    """
    Candidate modularity lower bounds for small m p

    Returns:
        Theorem1Bounds: (1 - 16 eps) e^{-mp} as stated, (1 - 31 eps) e^{-2mp}
        as the proof concludes, and the admissibility constant A_eps
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameters(f"epsilon must lie in (0, 1), got {epsilon}")
    mp = m * p
    return Theorem1Bounds(
        stated=(1.0 - 16.0 * epsilon) * math.exp(-mp),
        proof_level=(1.0 - 31.0 * epsilon) * math.exp(-2.0 * mp),
        a_eps=admissibility_constant(epsilon),
    )


def theorem1_admissible(n: int, m: int, p: float, epsilon: float) -> bool:
    """n p e^{-mp} >= A_eps"""
    return n * p * math.exp(-m * p) >= admissibility_constant(epsilon)


# ==================== Coupling with G(n, p_bar) ====================

def couple_hat(incidence: Incidence, seed: SeedLike) -> CouplingResult:
    """
    Thin G by keeping one uniformly chosen pair per clique of size >= 2

    Args:
        incidence: full or edges_only incidence
        seed: integer seed or generator for the pair draws

    Returns:
        CouplingResult: G, G_hat (a subgraph of G) and delta = e(G) - e(G_hat)
    """
    rng = as_generator(seed)
    sizes = incidence.sizes
    eligible = np.flatnonzero(sizes >= 2)
    g = project(incidence)
    if eligible.size == 0:
        return CouplingResult(g=g, g_hat=Graph.empty(incidence.n), delta=g.edge_count)
    counts = sizes[eligible]
    first = rng.integers(0, counts)
    second = rng.integers(0, counts - 1)
    second += second >= first
    starts = incidence.indptr[eligible]
    u = incidence.indices[starts + first]
    v = incidence.indices[starts + second]
    n = incidence.n
    g_hat = Graph.from_keys(n, np.minimum(u, v) * n + np.maximum(u, v))
    return CouplingResult(g=g, g_hat=g_hat, delta=g.edge_count - g_hat.edge_count)


def matched_er_probability(n: int, m: int, p: float) -> MatchedER:
    """
    Edge probability of the Erdos-Renyi model matched to G_hat

    q_hat = P(Bin(n, p) >= 2) and p_bar = 1 - exp(-m q_hat / C(n, 2)).
    """
    if n < 2:
        raise InvalidParameters(f"n must be at least 2, got {n}")
    RigParams(n=n, m=m, p=p)
    q_hat = float(binom.sf(1, n, p))
    pairs = n * (n - 1) / 2
    return MatchedER(q_hat=q_hat, p_bar=-math.expm1(-m * q_hat / pairs))


def sample_matched_er(n: int, m: int, p: float, seed: SeedLike) -> Graph:
    """Sample G(n, p_bar) for the parameters of G(n, m, p)"""
    return sample_er(n, matched_er_probability(n, m, p).p_bar, seed)


def coupling_gap_check(n: int, m: int, p: float, delta_exponent: float, reps: int,
                       seed: int) -> CouplingGapSummary:
    """
    Fraction of replications with Delta <= m (np)^(3 - delta_exponent)

    Args:
        n, m, p: model parameters, with n p < 1
        delta_exponent: slack exponent in the threshold
        reps: number of replications
        seed: master seed; replication r uses the stream (seed, r)

    Returns:
        CouplingGapSummary: the fraction plus every Delta and a containment verdict
    """
    if reps < 1:
        raise InvalidParameters(f"reps must be at least 1, got {reps}")
    if n * p >= 1.0:
        raise InvalidParameters(f"coupling regime needs n p < 1, got {n * p}")
    threshold = m * (n * p) ** (3.0 - delta_exponent)
    deltas, contained = [], True
    for rep in range(reps):
        params = RigParams(n=n, m=m, p=p, seed=derive_seed(seed, rep))
        coupling = couple_hat(sample_incidence_sparse(params, edges_only=True), make_rng(seed, rep, 1))
        deltas.append(coupling.delta)
        contained = contained and bool(np.isin(coupling.g_hat.keys, coupling.g.keys).all())
    within = sum(1 for value in deltas if value <= threshold)
    return CouplingGapSummary(
        fraction_within_bound=within / reps,
        threshold=threshold,
        deltas=deltas,
        containment_holds=contained,
    )
