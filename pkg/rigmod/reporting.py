"""
Aggregation of sweep rows and an optional SVG line chart
"""
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from rigmod.errors import EmptyInput, InvalidParameters  # noqa: E402
from rigmod.experiment_harness import CSV_COLUMNS, NUMERIC_COLUMNS, SweepRow, row_to_record  # noqa: E402

Row = Union[SweepRow, Mapping[str, str]]
STATISTICS = ("mean", "std", "median", "min", "max")


@dataclass
class ColumnStats:
    mean: float
    std: float
    median: float
    min: float
    max: float
    count: int


@dataclass
class GroupSummary:
    key: Tuple[str, ...]
    rows: int
    columns: Dict[str, ColumnStats] = field(default_factory=dict)


@dataclass
class ReportSummary:
    group_by: List[str]
    groups: List[GroupSummary]
    svg_path: Optional[Path] = None

    def to_csv(self) -> str:
        """One line per group; columns <field>_<statistic> for every numeric field"""
        numeric = [c for c in NUMERIC_COLUMNS if any(c in g.columns for g in self.groups)]
        headers = list(self.group_by) + ["rows"] + [f"{c}_{s}" for c in numeric for s in STATISTICS]
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(headers)
        for group in self.groups:
            line = list(group.key) + [str(group.rows)]
            for column in numeric:
                stats = group.columns.get(column)
                line.extend(format(getattr(stats, s), ".12g") if stats else "" for s in STATISTICS)
            writer.writerow(line)
        return buffer.getvalue()

    def as_dict(self) -> Dict:
        return {
            "group_by": self.group_by,
            "groups": [
                {"key": list(g.key), "rows": g.rows, "columns": {c: vars(s) for c, s in g.columns.items()}}
                for g in self.groups
            ],
            "svg_path": str(self.svg_path) if self.svg_path else None,
        }


def read_sweep_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    """Rows of a sweep CSV as header -> text dictionaries"""
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def _as_record(row: Row) -> Mapping[str, str]:
    if isinstance(row, SweepRow):
        return row_to_record(row, record_timings=row.runtime_ms is not None)
    return row


def _number(text: str) -> Optional[float]:
    if text is None or text == "":
        return None
    try:
        return float(text)
    except ValueError:
        return None


def summarize(values: Sequence[float]) -> ColumnStats:
    """Mean, sample standard deviation (0 for one value), median, min and max"""
    data = np.asarray(values, dtype=np.float64)
    return ColumnStats(
        mean=float(data.mean()),
        std=float(data.std(ddof=1)) if len(data) > 1 else 0.0,
        median=float(np.median(data)),
        min=float(data.min()),
        max=float(data.max()),
        count=len(data),
    )


def report(rows: Sequence[Row], group_by: Sequence[str], svg_path: Optional[Union[str, Path]] = None,
           x: Optional[str] = None, y: Optional[str] = None) -> ReportSummary:
    """
    Per-group statistics of every numeric sweep column

    Args:
        rows: SweepRow objects or CSV records
        group_by: column names defining the groups, in first-appearance order
        svg_path: when set, write a line chart of y against x per group
        x, y: numeric columns of the chart

    Returns:
        ReportSummary: groups with mean, std, median, min and max per column

    Raises:
        EmptyInput: no rows
    """
    if not rows:
        raise EmptyInput("report needs at least one row")
    known = {header for header, _ in CSV_COLUMNS}
    for name in list(group_by) + [c for c in (x, y) if c]:
        if name not in known:
            raise InvalidParameters(f"unknown sweep column {name!r}")
    records = [_as_record(row) for row in rows]

    grouped: Dict[Tuple[str, ...], List[Mapping[str, str]]] = {}
    for record in records:
        grouped.setdefault(tuple(record.get(c, "") for c in group_by), []).append(record)

    groups = []
    for key, members in grouped.items():
        summary = GroupSummary(key=key, rows=len(members))
        for column in NUMERIC_COLUMNS:
            values = [v for v in (_number(r.get(column)) for r in members) if v is not None]
            if values:
                summary.columns[column] = summarize(values)
        groups.append(summary)

    result = ReportSummary(group_by=list(group_by), groups=groups)
    if svg_path is not None:
        if not (x and y):
            raise InvalidParameters("an SVG chart needs both x and y columns")
        result.svg_path = plot_groups(grouped, x, y, svg_path)
    return result


def plot_groups(grouped: Mapping[Tuple[str, ...], List[Mapping[str, str]]], x: str, y: str,
                path: Union[str, Path]) -> Path:
    """Line chart of the mean of y at each x, one line per group"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for key, members in grouped.items():
        points: Dict[float, List[float]] = {}
        for record in members:
            x_value, y_value = _number(record.get(x)), _number(record.get(y))
            if x_value is not None and y_value is not None:
                points.setdefault(x_value, []).append(y_value)
        if not points:
            continue
        xs = sorted(points)
        label = ", ".join(key) if key else y
        ax.plot(xs, [float(np.mean(points[v])) for v in xs], marker="o", label=label)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.grid(True, alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    print(f"📁 Chart written to {path}", file=sys.stderr)
    return path
