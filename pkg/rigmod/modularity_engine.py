"""
Modularity scoring, exhaustive oracles and a Louvain heuristic

score(A) = sum over blocks S of e(S)/e(G) - (vol(S)/vol(G))^2 and the
modularity of G is the maximum score over all partitions of V(G).
Edge counts and volumes stay integers until the final division.
"""
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from rigmod.errors import EmptyGraph, InvalidParameters, TooLarge
from rigmod.graph_core import Graph
from rigmod.seeding import SeedLike, as_generator
from rigmod.settings import get_exact_max_n

TOLERANCE = 1e-12
DEFAULT_LEVELS = 20
BIPARTITION_MAX_N = 26
RESTRICTED_MAX_N = 13
LARGE_SIDE_MAX_N = 16

Subset = Union[Iterable[int], np.ndarray]


@dataclass(frozen=True, eq=False)
class Partition:
    """Block index per vertex; blocks are 0..block_count-1 and nonempty"""
    assignment: np.ndarray
    block_count: int

    def __post_init__(self):
        if self.assignment.ndim != 1:
            raise InvalidParameters("assignment must be one-dimensional")
        if len(self.assignment) == 0:
            if self.block_count != 0:
                raise InvalidParameters("empty assignment cannot have blocks")
            return
        if self.assignment.min() < 0 or self.assignment.max() >= self.block_count:
            raise InvalidParameters("block indices must lie in [0, block_count)")
        if np.any(np.bincount(self.assignment, minlength=self.block_count) == 0):
            raise InvalidParameters("every block must be nonempty")

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Compact arbitrary labels to 0..k-1 in order of first appearance"""
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) == 0:
            return cls(assignment=labels, block_count=0)
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(len(first))
        return cls(assignment=rank[inverse.ravel()], block_count=len(first))

    @classmethod
    def from_blocks(cls, n: int, blocks: Iterable[Iterable[int]]) -> "Partition":
        labels = np.full(n, -1, dtype=np.int64)
        for index, block in enumerate(blocks):
            members = np.asarray(list(block), dtype=np.int64)
            if len(members) == 0:
                continue
            if np.any(labels[members] >= 0):
                raise InvalidParameters("blocks overlap")
            labels[members] = index
        if np.any(labels < 0):
            raise InvalidParameters("blocks do not cover every vertex")
        return cls.from_labels(labels)

    @classmethod
    def trivial(cls, n: int) -> "Partition":
        return cls(assignment=np.zeros(n, dtype=np.int64), block_count=1 if n else 0)

    @property
    def n(self) -> int:
        return len(self.assignment)

    def blocks(self) -> List[List[int]]:
        order = np.argsort(self.assignment, kind="stable")
        bounds = np.concatenate([[0], np.cumsum(np.bincount(self.assignment, minlength=self.block_count))])
        return [order[bounds[b]:bounds[b + 1]].tolist() for b in range(self.block_count)]


@dataclass(frozen=True)
class BlockTerm:
    edge_fraction: float
    volume_fraction: float
    deviation: float


@dataclass(frozen=True, eq=False)
class ModularityReport:
    """A partition's score with its per-block terms"""
    score: float
    per_block: List[BlockTerm]
    method: str
    partition: Partition
    metadata: Dict[str, Any] = field(default_factory=dict)

    def key_value_lines(self) -> List[str]:
        lines = [
            f"method={self.method}",
            f"score={self.score:.12g}",
            f"blocks={len(self.per_block)}",
        ]
        lines.extend(f"{key}={value}" for key, value in self.metadata.items())
        return lines

    def blocks_csv(self) -> str:
        rows = ["block,edge_fraction,volume_fraction,deviation"]
        rows.extend(
            f"{index},{term.edge_fraction:.12g},{term.volume_fraction:.12g},{term.deviation:.12g}"
            for index, term in enumerate(self.per_block)
        )
        return "\n".join(rows) + "\n"

    def as_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "score": self.score,
            "block_count": self.partition.block_count,
            "assignment": self.partition.assignment.tolist(),
            "per_block": [vars(term) for term in self.per_block],
            **self.metadata,
        }


def _require_edges(graph: Graph):
    if graph.edge_count == 0:
        raise EmptyGraph()


def subset_mask(n: int, subset: Subset) -> np.ndarray:
    subset = np.asarray(subset if isinstance(subset, np.ndarray) else list(subset))
    if subset.dtype == bool:
        if len(subset) != n:
            raise InvalidParameters(f"boolean subset must have length {n}")
        return subset
    mask = np.zeros(n, dtype=bool)
    if len(subset):
        members = subset.astype(np.int64)
        if members.min() < 0 or members.max() >= n:
            raise InvalidParameters(f"subset vertex outside [0, {n})")
        mask[members] = True
    return mask


# ==================== Scoring ====================

def score(graph: Graph, partition: Partition, method: str = "supplied") -> ModularityReport:
    """
    Modularity score of a partition

    Args:
        graph: graph with at least one edge
        partition: partition of the graph's vertices
        method: tag recorded in the report

    Returns:
        ModularityReport: score and exact per-block terms
    """
    _require_edges(graph)
    if partition.n != graph.n:
        raise InvalidParameters(f"partition covers {partition.n} vertices, graph has {graph.n}")
    blocks = partition.block_count
    head_block = partition.assignment[graph.heads]
    inside = head_block == partition.assignment[graph.tails]
    internal = np.bincount(head_block[inside], minlength=blocks).tolist()
    volumes = np.zeros(blocks, dtype=np.int64)
    np.add.at(volumes, partition.assignment, graph.degrees)

    edges, volume = graph.edge_count, graph.volume
    terms = []
    for e_s, vol_s in zip(internal, volumes.tolist()):
        edge_fraction = e_s / edges
        volume_fraction = vol_s / volume
        terms.append(BlockTerm(edge_fraction, volume_fraction, edge_fraction - volume_fraction ** 2))
    total = math.fsum(term.deviation for term in terms)
    return ModularityReport(score=total, per_block=terms, method=method, partition=partition)


def deviation(graph: Graph, subset: Subset) -> float:
    """e(S)/e(G) - (vol(S)/vol(G))^2 for a vertex subset"""
    _require_edges(graph)
    mask = subset_mask(graph.n, subset)
    e_s = int(np.count_nonzero(mask[graph.heads] & mask[graph.tails]))
    vol_s = int(graph.degrees[mask].sum())
    return e_s / graph.edge_count - (vol_s / graph.volume) ** 2


def complement_check(graph: Graph, subset: Subset) -> Tuple[float, float]:
    """(deviation(S), deviation(complement of S)); the two agree for every S"""
    mask = subset_mask(graph.n, subset)
    return deviation(graph, mask), deviation(graph, ~mask)


# ==================== Exhaustive search ====================

def _extend_growth_strings(strings: np.ndarray, maxima: np.ndarray, steps: int,
                           max_blocks: int) -> Tuple[np.ndarray, np.ndarray]:
    """Append `steps` positions to restricted-growth strings, capped at max_blocks blocks"""
    for _ in range(steps):
        counts = np.minimum(maxima.astype(np.int64) + 2, max_blocks)
        parent = np.repeat(np.arange(len(strings)), counts)
        offsets = np.arange(len(parent)) - np.repeat(np.cumsum(counts) - counts, counts)
        offsets = offsets.astype(np.int8)
        strings = np.hstack([strings[parent], offsets[:, None]])
        maxima = np.maximum(maxima[parent], offsets)
    return strings, maxima


def restricted_growth_chunks(n: int, max_blocks: int, tail: int = 4, chunk: int = 16) -> Iterator[np.ndarray]:
    """
    Yield every set partition of n items with at most max_blocks blocks

    Partitions are restricted-growth strings (first item in block 0, each
    item at most one above the running maximum), produced in
    lexicographic order as int8 arrays of shape (rows, n).
    """
    head = max(1, n - tail)
    prefixes, maxima = _extend_growth_strings(np.zeros((1, 1), dtype=np.int8), np.zeros(1, dtype=np.int8),
                                              head - 1, max_blocks)
    for start in range(0, len(prefixes), chunk):
        strings, _ = _extend_growth_strings(prefixes[start:start + chunk], maxima[start:start + chunk],
                                            n - head, max_blocks)
        yield strings


def _score_labelings(labels: np.ndarray, heads: np.ndarray, tails: np.ndarray,
                     degrees: np.ndarray, edges: int) -> np.ndarray:
    volume = 2 * edges
    head_labels = labels[:, heads]
    same = head_labels == labels[:, tails]
    scores = np.zeros(len(labels))
    for block in range(int(labels.max()) + 1):
        internal = np.count_nonzero((head_labels == block) & same, axis=1)
        block_volume = (labels == block).astype(np.int64) @ degrees
        scores += internal / edges - (block_volume / volume) ** 2
    return scores


def _active_view(graph: Graph) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Drop isolated vertices, which never change a score"""
    active = np.flatnonzero(graph.degrees > 0)
    relabel = np.full(graph.n, -1, dtype=np.int64)
    relabel[active] = np.arange(len(active))
    return active, relabel[graph.heads], relabel[graph.tails], graph.degrees[active]


def _best_labeling(graph: Graph, chunks: Iterator[np.ndarray]) -> np.ndarray:
    active, heads, tails, degrees = _active_view(graph)
    best_score, best_labels = -math.inf, None
    for labels in chunks:
        scores = _score_labelings(labels, heads, tails, degrees, graph.edge_count)
        top = int(np.argmax(scores))
        if scores[top] > best_score:
            best_score, best_labels = scores[top], labels[top]
    full = np.zeros(graph.n, dtype=np.int64)
    full[active] = best_labels
    return full


def exact_modularity(graph: Graph, max_n: Optional[int] = None) -> ModularityReport:
    """
    Modularity by enumerating every set partition

    Args:
        graph: graph with at least one edge
        max_n: vertex limit (RIGMOD_EXACT_MAX_N, 11 by default)

    Returns:
        ModularityReport: a maximizing partition, score in [0, 1)
    """
    _require_edges(graph)
    limit = max_n if max_n is not None else get_exact_max_n()
    if graph.n > limit:
        raise TooLarge(f"exact modularity enumerates Bell({graph.n}) partitions; limit is n <= {limit}")
    active_count = int(np.count_nonzero(graph.degrees))
    labels = _best_labeling(graph, restricted_growth_chunks(active_count, active_count))
    return score(graph, Partition.from_labels(labels), method="exact")


def _bipartition_labels(graph: Graph, chunk_bits: int = 16) -> np.ndarray:
    active, heads, tails, degrees = _active_view(graph)
    free = len(active) - 1
    edges, volume = graph.edge_count, graph.volume
    best_score, best_mask = -math.inf, 0
    bit_values = np.arange(free, dtype=np.int64)
    step = 1 << min(free, chunk_bits)
    for start in range(0, 1 << free, step):
        masks = np.arange(start, start + step, dtype=np.int64)
        side = np.zeros((len(masks), free + 1), dtype=bool)
        side[:, 1:] = (masks[:, None] >> bit_values) & 1
        head_side, tail_side = side[:, heads], side[:, tails]
        e_one = np.count_nonzero(head_side & tail_side, axis=1)
        e_zero = np.count_nonzero(~head_side & ~tail_side, axis=1)
        vol_one = side.astype(np.int64) @ degrees
        scores = (e_zero + e_one) / edges - ((volume - vol_one) / volume) ** 2 - (vol_one / volume) ** 2
        top = int(np.argmax(scores))
        if scores[top] > best_score:
            best_score, best_mask = scores[top], int(masks[top])
    full = np.zeros(graph.n, dtype=np.int64)
    full[active[1:]] = (best_mask >> bit_values) & 1
    return full


def best_restricted(graph: Graph, k: int) -> ModularityReport:
    """
    Best score over partitions with at most k blocks

    The modularity of the graph lies between the result and k/(k-1)
    times the result.

    Args:
        graph: graph with at least one edge
        k: maximum number of blocks

    Returns:
        ModularityReport: method "bipartition" for k = 2, "restricted" above
    """
    _require_edges(graph)
    if k < 1:
        raise InvalidParameters(f"k must be at least 1, got {k}")
    if k == 1:
        return score(graph, Partition.trivial(graph.n), method="restricted")
    if k == 2:
        if graph.n > BIPARTITION_MAX_N:
            raise TooLarge(f"bipartition search is limited to n <= {BIPARTITION_MAX_N}")
        labels = _bipartition_labels(graph)
        report = score(graph, Partition.from_labels(labels), method="bipartition")
    else:
        if graph.n > RESTRICTED_MAX_N:
            raise TooLarge(f"restricted search with k >= 3 is limited to n <= {RESTRICTED_MAX_N}")
        active_count = int(np.count_nonzero(graph.degrees))
        labels = _best_labeling(graph, restricted_growth_chunks(active_count, k))
        report = score(graph, Partition.from_labels(labels), method="restricted")
    report.metadata["k"] = k
    return report


def large_side_deviation(graph: Graph) -> Tuple[float, List[int]]:
    """
    Maximum deviation over subsets holding at least half the vertices

    Four times this value bounds the modularity of the graph.

    Returns:
        (value, subset): the maximum and one subset attaining it
    """
    _require_edges(graph)
    n = graph.n
    if n > LARGE_SIDE_MAX_N:
        raise TooLarge(f"large-side enumeration is limited to n <= {LARGE_SIDE_MAX_N}")
    masks = np.arange(1 << n, dtype=np.int64)
    inside = ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)
    inside = inside[2 * inside.sum(axis=1) >= n]
    e_s = np.count_nonzero(inside[:, graph.heads] & inside[:, graph.tails], axis=1)
    vol_s = inside.astype(np.int64) @ graph.degrees
    values = e_s / graph.edge_count - (vol_s / graph.volume) ** 2
    top = int(np.argmax(values))
    return float(values[top]), np.flatnonzero(inside[top]).tolist()


# ==================== Louvain ====================

def _local_moving(indptr: List[int], indices: List[int], weights: List[int], strength: List[int],
                  edges: int, order: Iterable[int]) -> Tuple[List[int], bool]:
    """
    Greedy single-vertex moves driven by a FIFO queue

    The queue starts as `order`; a vertex that moves re-queues its
    neighbours outside its new block. Gains are compared as the integers
    2 e(G) k_{v,c} - vol(c) k_v, so ties are exact: the lowest block index
    wins among equal gains and a vertex only leaves its block on a strict
    gain.
    """
    size = len(strength)
    community = list(range(size))
    totals = list(strength)
    double_edges = 2 * edges
    queue = deque(order)
    queued = [True] * size
    moved = False
    while queue:
        v = queue.popleft()
        queued[v] = False
        own = community[v]
        k_v = strength[v]
        start, stop = indptr[v], indptr[v + 1]
        links: Dict[int, int] = {}
        for i in range(start, stop):
            c = community[indices[i]]
            links[c] = links.get(c, 0) + weights[i]
        totals[own] -= k_v
        stay = double_edges * links.get(own, 0) - totals[own] * k_v
        target, best = own, None
        for c, weight in links.items():
            if c == own:
                continue
            gain = double_edges * weight - totals[c] * k_v
            if best is None or gain > best or (gain == best and c < target):
                target, best = c, gain
        if best is not None and best > stay:
            community[v] = target
            moved = True
            for i in range(start, stop):
                u = indices[i]
                if not queued[u] and community[u] != target:
                    queued[u] = True
                    queue.append(u)
        totals[community[v]] += k_v
    return community, moved


def _aggregate(indptr: np.ndarray, indices: np.ndarray, weights: np.ndarray, strength: np.ndarray,
               community: List[int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Collapse blocks into weighted nodes, numbered by first appearance; edges inside a block are dropped"""
    mapping = Partition.from_labels(community).assignment
    size = int(mapping.max()) + 1
    sources = np.repeat(mapping, np.diff(indptr))
    targets = mapping[indices]
    between = sources != targets
    keys, inverse = np.unique(sources[between] * size + targets[between], return_inverse=True)
    merged_weights = np.bincount(inverse, weights=weights[between], minlength=len(keys)).astype(np.int64)
    heads = keys // size
    merged_indptr = np.concatenate([[0], np.cumsum(np.bincount(heads, minlength=size))]).astype(np.int64)
    merged_strength = np.bincount(mapping, weights=strength, minlength=size).astype(np.int64)
    return merged_indptr, keys % size, merged_weights, merged_strength, mapping


def louvain(graph: Graph, seed: SeedLike = None, levels: int = DEFAULT_LEVELS) -> ModularityReport:
    """
    Louvain heuristic: local moving followed by aggregation

    Vertices are queued in index order (a seeded permutation when seed is
    given); a vertex joins the neighbouring block with the largest gain,
    lowest block index on ties, when that gain strictly beats staying.
    Aggregation repeats for at most `levels` levels.

    Args:
        graph: graph with at least one edge
        seed: optional seed for the sweep order
        levels: aggregation level cap

    Returns:
        ModularityReport: a valid partition with score >= 0
    """
    _require_edges(graph)
    rng = as_generator(seed) if seed is not None else None
    indptr, indices = graph.adjacency
    weights = np.ones(len(indices), dtype=np.int64)
    strength = graph.degrees
    vertex_labels = np.arange(graph.n, dtype=np.int64)

    used = 0
    for _ in range(levels):
        size = len(strength)
        order = rng.permutation(size).tolist() if rng is not None else range(size)
        community, moved = _local_moving(indptr.tolist(), indices.tolist(), weights.tolist(),
                                         strength.tolist(), graph.edge_count, order)
        if not moved:
            break
        used += 1
        indptr, indices, weights, strength, mapping = _aggregate(indptr, indices, weights, strength, community)
        vertex_labels = mapping[vertex_labels]

    report = score(graph, Partition.from_labels(vertex_labels), method="louvain")
    if report.score < 0.0:
        report = score(graph, Partition.trivial(graph.n), method="louvain")
    report.metadata["levels"] = used
    return report
