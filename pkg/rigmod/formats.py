"""
Text formats for graphs, incidences and partitions

Edge list:   "n <n>" then one "u v" line per edge, 0-based, u < v.
Incidence:   "n <n> m <m>" (optionally followed by "edges_only"), then one
             line per attribute with its sorted members (possibly empty).
Partition:   one line of n comma-separated block indices.
"""
from pathlib import Path
from typing import List, Union

import numpy as np

from rigmod.errors import FormatError
from rigmod.graph_core import Graph, Incidence
from rigmod.modularity_engine import Partition

PathLike = Union[str, Path]


def _content_lines(text: str) -> List[str]:
    return [line.strip() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]


def format_edge_list(graph: Graph) -> str:
    lines = [f"n {graph.n}"]
    lines.extend(f"{u} {v}" for u, v in zip(graph.heads.tolist(), graph.tails.tolist()))
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    lines = _content_lines(text)
    if not lines:
        raise FormatError("edge list is empty")
    header = lines[0].split()
    if len(header) != 2 or header[0] != "n":
        raise FormatError(f"expected header 'n <n>', got {lines[0]!r}")
    try:
        n = int(header[1])
        pairs = [tuple(int(token) for token in line.split()) for line in lines[1:]]
    except ValueError as e:
        raise FormatError(f"non-integer token in edge list: {e}")
    for pair in pairs:
        if len(pair) != 2:
            raise FormatError(f"expected 'u v', got {pair}")
    return Graph.from_pairs(n, pairs)


def format_incidence(incidence: Incidence) -> str:
    header = f"n {incidence.n} m {incidence.m}"
    if incidence.edges_only:
        header += " edges_only"
    rows = [""] * incidence.m
    for position in range(incidence.stored_count):
        rows[incidence.attribute_index(position)] = " ".join(str(v) for v in incidence.members(position).tolist())
    return "\n".join([header] + rows) + "\n"


def parse_incidence(text: str) -> Incidence:
    lines = text.splitlines()
    while lines and not lines[0].strip():
        lines.pop(0)
    if not lines:
        raise FormatError("incidence is empty")
    header = lines[0].split()
    if len(header) not in (4, 5) or header[0] != "n" or header[2] != "m":
        raise FormatError(f"expected header 'n <n> m <m>', got {lines[0]!r}")
    edges_only = len(header) == 5
    if edges_only and header[4] != "edges_only":
        raise FormatError(f"unknown header flag {header[4]!r}")
    try:
        n, m = int(header[1]), int(header[3])
        rows = [[int(token) for token in line.split()] for line in lines[1:m + 1]]
    except ValueError as e:
        raise FormatError(f"non-integer token in incidence: {e}")
    if any(line.strip() for line in lines[m + 1:]):
        raise FormatError(f"more than {m} attribute lines")
    rows.extend([] for _ in range(m - len(rows)))
    for row in rows:
        if any(b <= a for a, b in zip(row, row[1:])):
            raise FormatError(f"member list {row} is not strictly increasing")
    return Incidence.from_members(n, rows, edges_only=edges_only)


def format_partition(partition: Partition) -> str:
    return ",".join(str(b) for b in partition.assignment.tolist()) + "\n"


def parse_partition(text: str) -> Partition:
    lines = _content_lines(text)
    if len(lines) != 1:
        raise FormatError("partition must be a single line of block indices")
    try:
        labels = np.array([int(token) for token in lines[0].split(",")], dtype=np.int64)
    except ValueError as e:
        raise FormatError(f"non-integer block index: {e}")
    return Partition.from_labels(labels)


def read_edge_list(path: PathLike) -> Graph:
    return parse_edge_list(Path(path).read_text(encoding="utf-8"))


def write_edge_list(graph: Graph, path: PathLike):
    Path(path).write_text(format_edge_list(graph), encoding="utf-8")


def read_incidence(path: PathLike) -> Incidence:
    return parse_incidence(Path(path).read_text(encoding="utf-8"))


def write_incidence(incidence: Incidence, path: PathLike):
    Path(path).write_text(format_incidence(incidence), encoding="utf-8")


def read_partition(path: PathLike) -> Partition:
    return parse_partition(Path(path).read_text(encoding="utf-8"))


def write_partition(partition: Partition, path: PathLike):
    Path(path).write_text(format_partition(partition), encoding="utf-8")
