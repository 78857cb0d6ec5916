"""
Core graph and incidence types plus seeded generators

An incidence records which vertices chose which attributes; its
projection joins two vertices whenever they share an attribute.
Vertices and attributes are 0-based.
"""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.stats import binom

from rigmod.errors import BudgetExceeded, InvalidParameters
from rigmod.seeding import SeedLike, as_generator, make_rng
from rigmod.settings import get_membership_cap

# Above this probability a chunked Bernoulli scan beats geometric skipping
DENSE_SAMPLING_THRESHOLD = 0.25
# Conditional clique sizes up to this value come from a cached inverse-CDF table
SIZE_TABLE_MAX = 64
# Relative size below which p_hat is reported as m*p^2
P_HAT_LINEAR_CUTOFF = 1e-12

_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class RigParams:
    """Parameters of G(n, m, p) plus the replication seed"""
    n: int
    m: int
    p: float
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameters(f"n must be a positive integer, got {self.n}")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidParameters(f"m must be a positive integer, got {self.m}")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidParameters(f"p must lie in [0, 1], got {self.p}")
        if self.seed < 0:
            raise InvalidParameters(f"seed must be unsigned, got {self.seed}")

    @property
    def expected_memberships(self) -> float:
        return self.n * self.m * self.p


@dataclass(frozen=True, eq=False)
class Incidence:
    """
    Bipartite vertex-attribute structure in compressed form

    Stored attribute j has members indices[indptr[j]:indptr[j+1]], sorted.
    attr_ids maps stored positions to attribute indices in [0, m); None
    means every attribute is stored in order. An edges_only incidence
    dropped the attributes with at most one member.
    """
    n: int
    m: int
    indptr: np.ndarray
    indices: np.ndarray
    attr_ids: Optional[np.ndarray] = None
    edges_only: bool = False

    def __post_init__(self):
        stored = len(self.indptr) - 1
        if stored < 0 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise InvalidParameters("indptr does not describe the member array")
        if np.any(np.diff(self.indptr) < 0):
            raise InvalidParameters("indptr must be nondecreasing")
        if self.attr_ids is None:
            if stored != self.m:
                raise InvalidParameters(f"expected {self.m} member lists, got {stored}")
        elif len(self.attr_ids) != stored:
            raise InvalidParameters("attr_ids must name every stored attribute")
        if len(self.indices):
            if self.indices.min() < 0 or self.indices.max() >= self.n:
                raise InvalidParameters(f"member index outside [0, {self.n})")
            same = self.attribute_of_entry[1:] == self.attribute_of_entry[:-1]
            if np.any(np.diff(self.indices)[same] <= 0):
                raise InvalidParameters("member lists must be strictly increasing")

    @classmethod
    def from_members(cls, n: int, members: Sequence[Iterable[int]], edges_only: bool = False) -> "Incidence":
        """Build an incidence from one member list per attribute"""
        lists = [np.asarray(sorted(row), dtype=np.int64) for row in members]
        sizes = np.array([len(row) for row in lists], dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        indices = np.concatenate(lists).astype(np.int64) if lists else np.zeros(0, dtype=np.int64)
        return cls(n=n, m=len(lists), indptr=indptr, indices=indices, edges_only=edges_only)

    @classmethod
    def empty(cls, n: int, m: int, edges_only: bool = False) -> "Incidence":
        if edges_only:
            return cls(n=n, m=m, indptr=np.zeros(1, dtype=np.int64), indices=np.zeros(0, dtype=np.int64),
                       attr_ids=np.zeros(0, dtype=np.int64), edges_only=True)
        return cls(n=n, m=m, indptr=np.zeros(m + 1, dtype=np.int64), indices=np.zeros(0, dtype=np.int64))

    @property
    def stored_count(self) -> int:
        return len(self.indptr) - 1

    @cached_property
    def sizes(self) -> np.ndarray:
        """V_i for each stored attribute"""
        return np.diff(self.indptr)

    @cached_property
    def attribute_of_entry(self) -> np.ndarray:
        return np.repeat(np.arange(self.stored_count, dtype=np.int64), self.sizes)

    @cached_property
    def vertex_attrs(self) -> np.ndarray:
        """|W(v)| per vertex (counts retained attributes only when edges_only)"""
        return np.bincount(self.indices, minlength=self.n).astype(np.int64)

    @property
    def total_memberships(self) -> int:
        return len(self.indices)

    def attribute_index(self, position: int) -> int:
        return int(position if self.attr_ids is None else self.attr_ids[position])

    def members(self, position: int) -> np.ndarray:
        return self.indices[self.indptr[position]:self.indptr[position + 1]]

    def member_lists(self) -> List[List[int]]:
        return [self.members(j).tolist() for j in range(self.stored_count)]

    def vertex_attribute_lists(self) -> List[List[int]]:
        """Materialize W(v) for every vertex"""
        order = np.argsort(self.indices, kind="stable")
        owners = self.attribute_of_entry[order]
        if self.attr_ids is not None:
            owners = self.attr_ids[owners]
        bounds = np.concatenate([[0], np.cumsum(self.vertex_attrs)])
        return [owners[bounds[v]:bounds[v + 1]].tolist() for v in range(self.n)]


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Simple undirected graph

    Edges are kept as (head, tail) arrays with head < tail, sorted by the
    pair key head * n + tail; adjacency lists are built on first use.
    """
    n: int
    heads: np.ndarray
    tails: np.ndarray

    def __post_init__(self):
        if len(self.heads) != len(self.tails):
            raise InvalidParameters("edge endpoint arrays differ in length")
        if len(self.heads):
            if np.any(self.heads >= self.tails):
                raise InvalidParameters("edges must satisfy head < tail (no self-loops)")
            if self.heads.min() < 0 or self.tails.max() >= self.n:
                raise InvalidParameters(f"edge endpoint outside [0, {self.n})")
            if np.any(np.diff(self.keys) <= 0):
                raise InvalidParameters("edges must be sorted and free of duplicates")

    @classmethod
    def from_keys(cls, n: int, keys: np.ndarray) -> "Graph":
        """Build from pair keys u * n + v (u < v), merging duplicates"""
        keys = np.unique(np.asarray(keys, dtype=np.int64))
        return cls(n=n, heads=keys // n, tails=keys % n)

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Tuple[int, int]]) -> "Graph":
        pairs = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise InvalidParameters("self-loops are not allowed")
        if len(pairs) and (pairs.min() < 0 or pairs.max() >= n):
            raise InvalidParameters(f"edge endpoint outside [0, {n})")
        low = pairs.min(axis=1)
        high = pairs.max(axis=1)
        return cls.from_keys(n, low * n + high)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n=n, heads=np.zeros(0, dtype=np.int64), tails=np.zeros(0, dtype=np.int64))

    @property
    def edge_count(self) -> int:
        """e(G)"""
        return len(self.heads)

    @property
    def volume(self) -> int:
        """vol(G) = 2 e(G)"""
        return 2 * self.edge_count

    @cached_property
    def keys(self) -> np.ndarray:
        return self.heads * self.n + self.tails

    @cached_property
    def degrees(self) -> np.ndarray:
        return (np.bincount(self.heads, minlength=self.n) + np.bincount(self.tails, minlength=self.n)).astype(np.int64)

    @cached_property
    def adjacency(self) -> Tuple[np.ndarray, np.ndarray]:
        """Sorted adjacency lists as (indptr, neighbors)"""
        sources = np.concatenate([self.heads, self.tails])
        targets = np.concatenate([self.tails, self.heads])
        order = np.lexsort((targets, sources))
        indptr = np.concatenate([[0], np.cumsum(self.degrees)]).astype(np.int64)
        return indptr, targets[order]

    def neighbors(self, v: int) -> np.ndarray:
        indptr, neighbors = self.adjacency
        return neighbors[indptr[v]:indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        key = min(u, v) * self.n + max(u, v)
        position = np.searchsorted(self.keys, key)
        return bool(position < len(self.keys) and self.keys[position] == key)

    def edges(self) -> Set[Tuple[int, int]]:
        return set(zip(self.heads.tolist(), self.tails.tolist()))


@dataclass(frozen=True)
class ModelMoments:
    p_hat: float
    d: float
    expected_edges: float
    mean_attribute_count: float
    mean_clique_size: float
    approximate: bool = False


# ==================== Sampling helpers ====================

def _bernoulli_positions(rng: np.random.Generator, total: int, p: float) -> np.ndarray:
    """Sorted indices of successes among `total` independent Bernoulli(p) cells"""
    if total <= 0 or p <= 0.0:
        return np.zeros(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    if p >= DENSE_SAMPLING_THRESHOLD:
        hits = []
        for start in range(0, total, _CHUNK_CELLS):
            stop = min(total, start + _CHUNK_CELLS)
            hits.append(np.flatnonzero(rng.random(stop - start) < p) + start)
        return np.concatenate(hits).astype(np.int64)

    # geometric gap skipping
    hits = []
    last = -1
    while True:
        remaining = total - last - 1
        if remaining <= 0:
            break
        mean = remaining * p
        batch = int(mean + 4.0 * math.sqrt(mean) + 16)
        positions = last + np.cumsum(rng.geometric(p, size=batch))
        inside = positions < total
        hits.append(positions[inside])
        if not inside.all():
            break
        last = int(positions[-1])
    return np.concatenate(hits).astype(np.int64)


def _uniform_subsets(rng: np.random.Generator, n: int, sizes: np.ndarray) -> np.ndarray:
    """
    Draw a uniform subset of [0, n) for every requested size

    Returns the concatenated member lists, each sorted, in input order.
    Small subsets are drawn with replacement and collided entries are
    redrawn until every list is duplicate free; the procedure is
    invariant under relabeling of [0, n), so each subset is uniform.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    owners = np.repeat(np.arange(len(sizes), dtype=np.int64), sizes)
    draws = np.empty(owners.size, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(sizes)])

    large_rows = np.flatnonzero(sizes > max(n // 4, 8))
    for row in large_rows:
        draws[starts[row]:starts[row + 1]] = rng.choice(n, size=int(sizes[row]), replace=False)

    small = np.ones(owners.size, dtype=bool)
    for row in large_rows:
        small[starts[row]:starts[row + 1]] = False
    positions = np.flatnonzero(small)
    draws[positions] = rng.integers(0, n, size=positions.size)
    while positions.size:
        order = np.lexsort((draws[positions], owners[positions]))
        ranked = positions[order]
        clash = (owners[ranked[1:]] == owners[ranked[:-1]]) & (draws[ranked[1:]] == draws[ranked[:-1]])
        if not clash.any():
            break
        redo = ranked[1:][clash]
        draws[redo] = rng.integers(0, n, size=redo.size)

    order = np.lexsort((draws, owners))
    return draws[order]


def _truncated_binomial(rng: np.random.Generator, n: int, p: float, count: int, low: int = 2) -> np.ndarray:
    """Draw `count` values of Bin(n, p) conditioned on being at least `low`"""
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    tail = binom.sf(low - 1, n, p)
    top = min(n, SIZE_TABLE_MAX)
    support = np.arange(low, top + 1, dtype=np.int64)
    cdf = np.cumsum(binom.pmf(support, n, p)) / tail
    beyond = binom.sf(top, n, p) / tail if n > top else 0.0

    u = rng.random(count)
    slot = np.searchsorted(cdf, u, side="right")
    overflow = slot >= len(support)
    sizes = support[np.minimum(slot, len(support) - 1)]
    if overflow.any() and beyond > 1e-12:
        # rejection from the untruncated binomial above the table
        pending = np.flatnonzero(overflow)
        while pending.size:
            trial = rng.binomial(n, p, size=pending.size)
            accepted = trial > top
            sizes[pending[accepted]] = trial[accepted]
            pending = pending[~accepted]
    return sizes


def _from_sizes(n: int, m: int, sizes: np.ndarray, indices: np.ndarray,
                attr_ids: Optional[np.ndarray] = None, edges_only: bool = False) -> Incidence:
    indptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    return Incidence(n=n, m=m, indptr=indptr, indices=indices.astype(np.int64),
                     attr_ids=attr_ids, edges_only=edges_only)


# ==================== Generators ====================

def sample_incidence(params: RigParams) -> Incidence:
    """
    Sample the full incidence of G(n, m, p)

    Every (vertex, attribute) cell is an independent Bernoulli(p) draw,
    scanned attribute-major so member lists come out sorted.

    Args:
        params: model parameters and replication seed

    Returns:
        Incidence: every one of the m attributes, possibly empty
    """
    rng = make_rng(params.seed)
    n, m = params.n, params.m
    cells = _bernoulli_positions(rng, n * m, params.p)
    attributes = cells // n
    sizes = np.bincount(attributes, minlength=m).astype(np.int64)
    return _from_sizes(n, m, sizes, cells % n)


def sample_incidence_sparse(params: RigParams, edges_only: bool = False,
                            membership_cap: Optional[int] = None) -> Incidence:
    """
    Sample G(n, m, p) by clique sizes instead of cells

    Clique sizes are drawn first and member sets uniformly afterwards.
    With edges_only the number of attributes with V_i >= 2 is drawn from
    Bin(m, P(Bin(n, p) >= 2)) and only those attributes are kept, which is
    enough for the projection but not for exclusive-member statistics.

    Args:
        params: model parameters and replication seed
        edges_only: drop attributes with at most one member
        membership_cap: memory budget in memberships (RIGMOD_MEMBERSHIP_CAP by default)

    Returns:
        Incidence: tagged edges_only when attributes were dropped
    """
    rng = make_rng(params.seed)
    n, m, p = params.n, params.m, params.p
    cap = membership_cap if membership_cap is not None else get_membership_cap()
    if p == 0.0:
        return Incidence.empty(n, m, edges_only=edges_only)

    if edges_only:
        expected = m * (n * p - n * p * (1.0 - p) ** (n - 1))
        _check_budget(expected, cap)
        retained = int(rng.binomial(m, binom.sf(1, n, p)))
        attr_ids = np.sort(rng.choice(m, size=retained, replace=False)).astype(np.int64)
        sizes = _truncated_binomial(rng, n, p, retained)
        return _from_sizes(n, m, sizes, _uniform_subsets(rng, n, sizes), attr_ids=attr_ids, edges_only=True)

    _check_budget(params.expected_memberships, cap)
    sizes = rng.binomial(n, p, size=m).astype(np.int64)
    return _from_sizes(n, m, sizes, _uniform_subsets(rng, n, sizes))


def _check_budget(expected: float, cap: int):
    if expected > cap:
        raise BudgetExceeded(f"expected {expected:.3g} memberships exceed the cap of {cap}")


def clique_pair_keys(incidence: Incidence) -> np.ndarray:
    """
    Pair keys u * n + v of every clique edge, with multiplicity

    One key per (attribute, pair) so a pair shared by c attributes
    appears c times.
    """
    n = incidence.n
    sizes = incidence.sizes
    chunks = []
    for size in np.unique(sizes[sizes >= 2]):
        size = int(size)
        rows = np.flatnonzero(sizes == size)
        upper, lower = np.triu_indices(size, 1)
        step = max(1, _CHUNK_CELLS // len(upper))
        for start in range(0, len(rows), step):
            first = incidence.indptr[rows[start:start + step]]
            block = incidence.indices[first[:, None] + np.arange(size)]
            chunks.append((block[:, upper] * n + block[:, lower]).ravel())
    if not chunks:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(chunks).astype(np.int64)


def project(incidence: Incidence) -> Graph:
    """
    Project an incidence to its intersection graph

    Args:
        incidence: vertex-attribute structure

    Returns:
        Graph: union of the cliques on the member sets, duplicates merged
    """
    return Graph.from_keys(incidence.n, clique_pair_keys(incidence))


def _pairs_from_index(index: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Map k in [0, C(n,2)) to the pair (u, v), u < v, enumerated by v then u"""
    v = np.floor((1.0 + np.sqrt(1.0 + 8.0 * index.astype(np.float64))) / 2.0).astype(np.int64)
    v -= (v * (v - 1) // 2 > index)
    v += ((v + 1) * v // 2 <= index)
    u = index - v * (v - 1) // 2
    return u, v


def sample_er(n: int, q: float, seed: SeedLike) -> Graph:
    """
    Sample the Erdos-Renyi graph G(n, q)

    Args:
        n: vertex count
        q: independent edge probability
        seed: integer seed or generator

    Returns:
        Graph: each of the C(n, 2) pairs present with probability q
    """
    if not 0.0 <= q <= 1.0:
        raise InvalidParameters(f"q must lie in [0, 1], got {q}")
    rng = as_generator(seed)
    index = _bernoulli_positions(rng, n * (n - 1) // 2, q)
    u, v = _pairs_from_index(index, n)
    return Graph.from_keys(n, u * n + v)


def model_moments(n: int, m: int, p: float) -> ModelMoments:
    """
    Edge probability and degree scale of G(n, m, p)

    Returns:
        ModelMoments: p_hat = 1 - (1 - p^2)^m, d = n m p^2, expected edge count
    """
    RigParams(n=n, m=m, p=p)
    linear = m * p * p
    approximate = False
    if p == 1.0:
        p_hat = 1.0
    elif linear < P_HAT_LINEAR_CUTOFF:
        # relative error of order m p^2 / 2
        p_hat = linear
        approximate = linear > 0.0
    else:
        p_hat = -math.expm1(m * math.log1p(-p * p))
    return ModelMoments(
        p_hat=p_hat,
        d=n * linear,
        expected_edges=n * (n - 1) / 2 * p_hat,
        mean_attribute_count=m * p,
        mean_clique_size=n * p,
        approximate=approximate,
    )

