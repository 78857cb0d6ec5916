"""
Clique-cover statistics of an incidence

Counts are indexed by stored attribute position; for a full incidence
that is the attribute index itself.
"""
from dataclasses import dataclass
from typing import List

import numpy as np

from rigmod.errors import EdgesOnlyIncidence, InvalidParameters
from rigmod.graph_core import Incidence, clique_pair_keys
from rigmod.modularity_engine import Subset, subset_mask

DEFAULT_TRUNCATION = 6


@dataclass(frozen=True, eq=False)
class AttributeStats:
    """
    Clique sizes V_i and exclusive members

    Exclusive members of attribute i are the members holding no other
    attribute; exclusive lists are stored compressed like the incidence.
    """
    sizes: np.ndarray
    exclusive_indptr: np.ndarray
    exclusive_indices: np.ndarray

    @property
    def exclusive_sizes(self) -> np.ndarray:
        return np.diff(self.exclusive_indptr)

    def exclusive(self, position: int) -> np.ndarray:
        return self.exclusive_indices[self.exclusive_indptr[position]:self.exclusive_indptr[position + 1]]

    def exclusive_lists(self) -> List[List[int]]:
        return [self.exclusive(i).tolist() for i in range(len(self.sizes))]


@dataclass(frozen=True, eq=False)
class SubsetCounts:
    """X_{i,S} and X_{i,complement of S} per attribute"""
    subset: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def subset_size(self) -> int:
        return int(np.count_nonzero(self.subset))


@dataclass(frozen=True)
class CliqueBounds:
    eS_upper: int
    eSbar_cross_lower: int
    vol_lower: int


@dataclass(frozen=True)
class RegimeDiagnostics:
    deviating: int
    concentrated: int
    large_cliques: List[int]
    k_values: List[int]

    @property
    def M_S(self) -> int:
        return self.deviating

    @property
    def N_k(self) -> List[int]:
        return self.large_cliques


def attribute_stats(incidence: Incidence) -> AttributeStats:
    """
    V_i and the exclusive member lists of every attribute

    Args:
        incidence: a full incidence (not edges_only)

    Returns:
        AttributeStats: sizes plus exclusive members
    """
    if incidence.edges_only:
        raise EdgesOnlyIncidence("attribute_stats")
    exclusive_entry = incidence.vertex_attrs[incidence.indices] == 1
    owners = incidence.attribute_of_entry[exclusive_entry]
    exclusive_sizes = np.bincount(owners, minlength=incidence.stored_count)
    return AttributeStats(
        sizes=incidence.sizes.copy(),
        exclusive_indptr=np.concatenate([[0], np.cumsum(exclusive_sizes)]).astype(np.int64),
        exclusive_indices=incidence.indices[exclusive_entry],
    )


def subset_counts(incidence: Incidence, subset: Subset) -> SubsetCounts:
    """Exact per-attribute intersection counts with S and its complement"""
    mask = subset_mask(incidence.n, subset)
    inside = mask[incidence.indices]
    x = np.bincount(incidence.attribute_of_entry[inside], minlength=incidence.stored_count).astype(np.int64)
    return SubsetCounts(subset=mask, x=x, y=incidence.sizes - x)


def _pair_multiplicities(incidence: Incidence) -> np.ndarray:
    _, counts = np.unique(clique_pair_keys(incidence), return_counts=True)
    return counts


def e1_count(incidence: Incidence) -> int:
    """Number of vertex pairs contained together in at least two attributes"""
    return int(np.count_nonzero(_pair_multiplicities(incidence) >= 2))


def excess_coverage(incidence: Incidence) -> int:
    """
    Surplus clique coverage: sum over covered pairs of (multiplicity - 1)

    Equals sum_i C(V_i, 2) - e(G), and equals e1_count whenever no pair
    lies in three or more attributes.
    """
    return int((_pair_multiplicities(incidence) - 1).sum())


def e1_upper_bound(n: int, m: int, p: float) -> float:
    """First-moment bound n^2 m^2 p^4 on E1"""
    return float(n) ** 2 * float(m) ** 2 * p ** 4


def e2_count(incidence: Incidence, threshold: int = DEFAULT_TRUNCATION) -> int:
    """Sum of V_i (V_i - 1) over attributes with V_i > threshold"""
    if threshold < 1:
        raise InvalidParameters(f"truncation threshold must be at least 1, got {threshold}")
    large = incidence.sizes[incidence.sizes > threshold].astype(np.int64)
    return int((large * (large - 1)).sum())


def clique_bounds(incidence: Incidence, subset: Subset) -> CliqueBounds:
    """
    Clique-cover bounds on e(S), e(S, complement) and vol(S)

    The lower bounds subtract the surplus coverage, so they hold even
    when some pair lies in three or more cliques.
    """
    counts = subset_counts(incidence, subset)
    surplus = excess_coverage(incidence)
    x, y, sizes = counts.x, counts.y, incidence.sizes
    return CliqueBounds(
        eS_upper=int((x * (x - 1)).sum() // 2),
        eSbar_cross_lower=int((x * y).sum()) - surplus,
        vol_lower=int((x * (sizes - 1)).sum()) - 2 * surplus,
    )


def regime_diagnostics(incidence: Incidence, subset: Subset, p: float,
                       epsilon: float, k_max: int) -> RegimeDiagnostics:
    """
    Concentration diagnostics of the large-np regime

    deviating counts attributes with |X_{i,S} - s p| >= epsilon s p
    (zero when s p = 0) and large_cliques[k - 5] counts attributes with
    V_i >= k n p for k = 5..k_max (zero when n p = 0).

    Args:
        incidence: a full incidence
        subset: the vertex subset S
        p: membership probability the incidence was sampled with
        epsilon: relative tolerance in (0, 1)
        k_max: largest multiple of n p inspected, at least 5
    """
    if incidence.edges_only:
        raise EdgesOnlyIncidence("regime_diagnostics")
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameters(f"epsilon must lie in (0, 1), got {epsilon}")
    if k_max < 5:
        raise InvalidParameters(f"k_max must be at least 5, got {k_max}")
    counts = subset_counts(incidence, subset)
    centre = counts.subset_size * p
    if centre == 0.0:
        deviating = 0
    else:
        deviating = int(np.count_nonzero(np.abs(counts.x - centre) >= epsilon * centre))
    k_values = list(range(5, k_max + 1))
    scale = incidence.n * p
    if scale == 0.0:
        large = [0] * len(k_values)
    else:
        large = [int(np.count_nonzero(incidence.sizes >= k * scale)) for k in k_values]
    return RegimeDiagnostics(
        deviating=deviating,
        concentrated=incidence.stored_count - deviating,
        large_cliques=large,
        k_values=k_values,
    )
