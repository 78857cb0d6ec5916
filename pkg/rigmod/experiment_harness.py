"""
Seeded parameter sweeps over G(n, m, p)

Each (grid point, replication) pair samples an incidence, projects it,
scores Louvain and the exclusive-attribute partition, samples the
matched Erdos-Renyi graph and records the regime's bound shape. Rows
are computed in a process pool but emitted in (grid_index, rep_index)
order, so a CSV depends only on the config.
"""
import csv
import io
import math
import sys
import time
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from scipy.stats import binom

from rigmod.constructions import NONEMPTY_EXCLUSIVE, PARTITION_MODES, AttrPartitionConfig, \
    build_attribute_partition, matched_er_probability, sample_matched_er
from rigmod.errors import BudgetExceeded, EmptyGraph, InvalidParameters, RegimeInvalid
from rigmod.graph_core import Incidence, RigParams, model_moments, project, sample_incidence, \
    sample_incidence_sparse
from rigmod.modularity_engine import louvain, score
from rigmod.seeding import derive_seed, make_rng
from rigmod.settings import get_membership_cap, get_worker_count
from rigmod.structure_stats import DEFAULT_TRUNCATION, e1_count, e1_upper_bound, e2_count

REGIMES = ("cor1", "cor2", "thm2", "thm3", "thm4", "custom")
# delta in the (np)^(1 - delta) error term of the small-np comparison
DEFAULT_DELTA = 0.1
# epsilon of the cor1 proof_bound column; 0 gives the limiting e^(-2mp)
DEFAULT_BOUND_EPSILON = 0.0
# exponent of n p in the thm3 bound shape
THM3_TRUNCATION = 2
# edges_only sampling when P(Bin(n, p) >= 2) falls below this
SPARSE_RETENTION_RATIO = 0.05

FLAG_EMPTY_GRAPH = "empty-graph"
FLAG_ER_EMPTY = "er-empty-graph"
FLAG_REGIME_INVALID = "regime-invalid"

GridPoint = Tuple[int, int, float]


def omega_for(n: int) -> float:
    """Slowly growing omega = ln(ln(n + 16)) used in the bound shapes"""
    return math.log(math.log(n + 16))


def regime_bound(regime: str, n: int, m: int, p: float, epsilon: float, omega: float,
                 delta: float = DEFAULT_DELTA) -> float:
    """
    Raw bound shape of a theorem regime, without calibration constants

    Args:
        regime: cor1, cor2, thm2, thm3 or thm4
        n, m, p: model parameters
        epsilon: tolerance of the cor1 bound, in [0, 1)
        omega: slowly growing factor (thm2 and thm3)
        delta: error exponent slack (thm4 only)

    Returns:
        float: the bound value

    Raises:
        RegimeInvalid: parameters outside the regime, or regime custom
    """
    if regime not in REGIMES:
        raise RegimeInvalid(f"unknown regime {regime!r}")
    if not (n >= 1 and m >= 0 and 0.0 <= p <= 1.0):
        raise RegimeInvalid(f"invalid model parameters n={n}, m={m}, p={p}")
    n_p, m_p, m_p2 = n * p, m * p, m * p * p
    d = n * m_p2

    if regime == "cor1":
        if not 0.0 <= epsilon < 1.0:
            raise RegimeInvalid(f"cor1 needs epsilon in [0, 1), got {epsilon}")
        return (1.0 - 31.0 * epsilon) * math.exp(-2.0 * m_p)
    if regime == "thm2":
        if m <= n:
            raise RegimeInvalid(f"thm2 needs m > n, got m={m}, n={n}")
        if not n_p > math.log(m / n):
            raise RegimeInvalid(f"thm2 needs np > ln(m/n), got np={n_p:.6g}, ln(m/n)={math.log(m / n):.6g}")
        return math.sqrt(math.log(m / n) / n_p) + n / m + omega * m_p2
    if regime == "thm3":
        if d < 1.0:
            raise RegimeInvalid(f"thm3 needs d >= 1, got d={d:.6g}")
        return 1.0 / math.sqrt(d) + n_p ** THM3_TRUNCATION + omega * m_p2
    if regime == "cor2":
        if m < n * n or d < 1.0:
            raise RegimeInvalid(f"cor2 needs m >= n^2 and d >= 1, got m={m}, d={d:.6g}")
        return 1.0 / math.sqrt(d)
    if regime == "thm4":
        if n_p >= 1.0:
            raise RegimeInvalid(f"thm4 needs np < 1, got np={n_p:.6g}")
        return n_p ** (1.0 - delta)
    raise RegimeInvalid("custom sweeps carry no bound")


# ==================== Configuration ====================

@dataclass(frozen=True)
class SweepConfig:
    """
    One sweep: a grid of (n, m, p) points, each replicated reps times

    Row (g, r) draws from streams keyed by (master_seed, g, r), so the
    output does not depend on the worker count.
    """
    regime: str
    grid: Tuple[GridPoint, ...]
    reps: int = 1
    master_seed: int = 0
    epsilon: float = 0.3
    output: Optional[str] = None
    partition_mode: str = NONEMPTY_EXCLUSIVE
    record_timings: bool = False
    workers: Optional[int] = None
    membership_cap: Optional[int] = None
    sparse_ratio: float = SPARSE_RETENTION_RATIO
    truncation: int = DEFAULT_TRUNCATION
    delta: float = DEFAULT_DELTA
    bound_epsilon: float = DEFAULT_BOUND_EPSILON

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple((int(n), int(m), float(p)) for n, m, p in self.grid))
        if self.regime not in REGIMES:
            raise InvalidParameters(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.reps < 1:
            raise InvalidParameters(f"reps must be at least 1, got {self.reps}")
        if not self.grid:
            raise InvalidParameters("grid must contain at least one (n, m, p) point")
        for n, m, p in self.grid:
            RigParams(n=n, m=m, p=p)
        if self.partition_mode not in PARTITION_MODES:
            raise InvalidParameters(f"partition_mode must be one of {PARTITION_MODES}, got {self.partition_mode!r}")
        AttrPartitionConfig(epsilon=self.epsilon, mode=self.partition_mode)
        if not 0.0 <= self.bound_epsilon < 1.0:
            raise InvalidParameters(f"bound_epsilon must lie in [0, 1), got {self.bound_epsilon}")


PRESETS: Dict[str, Dict] = {
    "cor1-strong": {"regime": "cor1", "grid": [(100_000, 100, 1e-4)], "reps": 20},
    "cor1-moderate": {"regime": "cor1", "grid": [(10_000, 100, 1e-3)], "reps": 20},
    "thm2": {"regime": "thm2", "grid": [(300, 3000, np_ / 300) for np_ in (2.5, 3.5, 4.5)], "reps": 20},
    "thm3": {"regime": "thm3", "grid": [(100_000, m, 1e-6) for m in (10_000_000, 40_000_000, 160_000_000)],
             "reps": 10},
    "thm4": {"regime": "thm4", "grid": [(10_000, 2_000_000, 1e-5)], "reps": 30},
    "cor2": {"regime": "cor2", "grid": [(100, 10_000, 0.002)], "reps": 20},
}


def preset_config(name: str, **overrides) -> SweepConfig:
    """
    Build the SweepConfig of a shipped preset

    Args:
        name: one of PRESETS
        overrides: SweepConfig fields replacing the preset's values (None is ignored)
    """
    if name not in PRESETS:
        raise InvalidParameters(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    values = dict(PRESETS[name])
    values.update({key: value for key, value in overrides.items() if value is not None})
    return SweepConfig(**values)


# ==================== Rows ====================

@dataclass
class SweepRow:
    regime: str
    n: int
    m: int
    p: float
    seed: int
    d: float
    n_p: float
    m_p: float
    m_p2: float
    p_hat: float
    edges: int
    e1: int
    e2: int
    e1_bound: Optional[float] = None
    louvain_mod: Optional[float] = None
    attr_partition_mod: Optional[float] = None
    er_p_bar: Optional[float] = None
    er_louvain_mod: Optional[float] = None
    proof_bound: Optional[float] = None
    omega: Optional[float] = None
    runtime_ms: Optional[float] = None
    flags: List[str] = field(default_factory=list)

    @property
    def flag(self) -> str:
        return ";".join(self.flags)


# CSV header -> SweepRow attribute, in column order
CSV_COLUMNS: Tuple[Tuple[str, str], ...] = (
    ("regime", "regime"), ("n", "n"), ("m", "m"), ("p", "p"), ("seed", "seed"),
    ("d", "d"), ("np", "n_p"), ("mp", "m_p"), ("mp2", "m_p2"), ("p_hat", "p_hat"),
    ("edges", "edges"), ("e1", "e1"), ("e1_bound", "e1_bound"), ("e2", "e2"),
    ("louvain_mod", "louvain_mod"), ("attr_partition_mod", "attr_partition_mod"),
    ("er_p_bar", "er_p_bar"), ("er_louvain_mod", "er_louvain_mod"),
    ("proof_bound", "proof_bound"), ("omega", "omega"), ("runtime_ms", "runtime_ms"),
    ("flag", "flag"),
)
NUMERIC_COLUMNS = tuple(header for header, _ in CSV_COLUMNS if header not in ("regime", "flag"))


def csv_headers(record_timings: bool = False) -> List[str]:
    return [header for header, _ in CSV_COLUMNS if record_timings or header != "runtime_ms"]


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def row_to_record(row: SweepRow, record_timings: bool = False) -> Dict[str, str]:
    attributes = dict(CSV_COLUMNS)
    return {header: _format_cell(getattr(row, attributes[header])) for header in csv_headers(record_timings)}


def rows_to_csv(rows: Sequence[SweepRow], record_timings: bool = False) -> str:
    """Comma-separated rows with a header, floats at 12 significant digits, LF endings"""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=csv_headers(record_timings), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row_to_record(row, record_timings))
    return buffer.getvalue()


def write_sweep_csv(rows: Sequence[SweepRow], path: Union[str, Path], record_timings: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write(rows_to_csv(rows, record_timings))
    print(f"💾 Wrote {len(rows)} sweep rows to {path}", file=sys.stderr)
    return path


# ==================== Replications ====================

def use_sparse_path(n: int, p: float, ratio: float = SPARSE_RETENTION_RATIO) -> bool:
    """True when few attributes reach two members, so edges_only sampling suffices"""
    return float(binom.sf(1, n, p)) < ratio


def _sample(config: SweepConfig, params: RigParams) -> Incidence:
    if use_sparse_path(params.n, params.p, config.sparse_ratio):
        return sample_incidence_sparse(params, edges_only=True, membership_cap=config.membership_cap)
    return sample_incidence(params)


def run_replication(config: SweepConfig, grid_index: int, rep: int) -> SweepRow:
    """
    Compute one sweep row

    Streams: the incidence uses derive_seed(master_seed, g, r) and the
    matched Erdos-Renyi sample uses the stream (master_seed, g, r, 1).
    """
    started = time.perf_counter()
    n, m, p = config.grid[grid_index]
    seed = derive_seed(config.master_seed, grid_index, rep)
    params = RigParams(n=n, m=m, p=p, seed=seed)
    moments = model_moments(n, m, p)
    incidence = _sample(config, params)
    graph = project(incidence)

    row = SweepRow(
        regime=config.regime, n=n, m=m, p=p, seed=seed,
        d=moments.d, n_p=n * p, m_p=m * p, m_p2=m * p * p, p_hat=moments.p_hat,
        edges=graph.edge_count, e1=e1_count(incidence), e2=e2_count(incidence, config.truncation),
        e1_bound=e1_upper_bound(n, m, p),
        omega=omega_for(n),
    )
    if graph.edge_count == 0:
        row.flags.append(FLAG_EMPTY_GRAPH)
    else:
        row.louvain_mod = louvain(graph).score
        if not incidence.edges_only:
            partition = build_attribute_partition(
                incidence, params, AttrPartitionConfig(epsilon=config.epsilon, mode=config.partition_mode))
            row.attr_partition_mod = score(graph, partition, method="attribute").score

    if n >= 2:
        row.er_p_bar = matched_er_probability(n, m, p).p_bar
        er_graph = sample_matched_er(n, m, p, make_rng(config.master_seed, grid_index, rep, 1))
        try:
            row.er_louvain_mod = louvain(er_graph).score
        except EmptyGraph:
            row.flags.append(FLAG_ER_EMPTY)

    if config.regime != "custom":
        try:
            row.proof_bound = regime_bound(config.regime, n, m, p, config.bound_epsilon, row.omega, config.delta)
        except RegimeInvalid:
            row.flags.append(FLAG_REGIME_INVALID)

    row.runtime_ms = (time.perf_counter() - started) * 1000.0
    return row


def _run_task(task: Tuple[SweepConfig, int, int]) -> SweepRow:
    return run_replication(*task)


def check_budget(config: SweepConfig):
    """Reject grid points whose n m p expected memberships exceed the cap"""
    cap = config.membership_cap if config.membership_cap is not None else get_membership_cap()
    for n, m, p in config.grid:
        if n * m * p >= cap:
            raise BudgetExceeded(f"grid point (n={n}, m={m}, p={p}) expects {n * m * p:.3g} "
                                 f"memberships, cap is {cap}")


def run_sweep(config: SweepConfig) -> List[SweepRow]:
    """
    Run every replication of every grid point

    Args:
        config: sweep definition; output, when set, receives the CSV

    Returns:
        List[SweepRow]: rows in (grid_index, rep_index) order

    Raises:
        BudgetExceeded: a grid point is too large for the membership cap
    """
    check_budget(config)
    tasks = [(config, g, r) for g in range(len(config.grid)) for r in range(config.reps)]
    workers = config.workers if config.workers is not None else get_worker_count()
    print(f"🚀 Sweep {config.regime}: {len(config.grid)} grid points x {config.reps} reps, "
          f"{workers} workers, master seed {config.master_seed}", file=sys.stderr)

    if workers > 1 and len(tasks) > 1:
        with Pool(processes=min(workers, len(tasks))) as pool:
            rows = pool.map(_run_task, tasks)
    else:
        rows = [_run_task(task) for task in tasks]

    for g, (n, m, p) in enumerate(config.grid):
        point_rows = rows[g * config.reps:(g + 1) * config.reps]
        scored = [row.louvain_mod for row in point_rows if row.louvain_mod is not None]
        summary = f"mean louvain_mod {sum(scored) / len(scored):.4f}" if scored else "no edges"
        print(f"📊 n={n} m={m} p={p:g}: {summary}", file=sys.stderr)

    if config.output:
        write_sweep_csv(rows, config.output, config.record_timings)
    print(f"✅ Sweep finished with {len(rows)} rows", file=sys.stderr)
    return rows
