import pytest

from rigmod.graph_core import Graph, Incidence


@pytest.fixture
def two_triangles() -> Graph:
    return Graph.from_pairs(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])


@pytest.fixture
def k2() -> Graph:
    return Graph.from_pairs(2, [(0, 1)])


@pytest.fixture
def triangle_plus_edge() -> Graph:
    return Graph.from_pairs(5, [(0, 1), (0, 2), (1, 2), (3, 4)])


@pytest.fixture
def complete_graph():
    def build(n: int) -> Graph:
        return Graph.from_pairs(n, [(u, v) for u in range(n) for v in range(u + 1, n)])
    return build


@pytest.fixture
def exclusive_triangles() -> Incidence:
    """Vertices 0-2 hold only attribute 0, vertices 3-5 only attribute 1"""
    return Incidence.from_members(6, [[0, 1, 2], [3, 4, 5]])


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    for name in ("RIGMOD_THREADS", "RIGMOD_MEMBERSHIP_CAP", "RIGMOD_EXACT_MAX_N"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("RIGMOD_DATA_DIR", str(tmp_path / "data"))
