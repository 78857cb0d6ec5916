import os
from pathlib import Path

PACKAGE_DIR = Path(__file__).parent.absolute()
DEFAULT_DATA_DIR = PACKAGE_DIR.parent / "data"


def _positive_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be a positive integer, got {raw!r}")
    if value < 1:
        raise ValueError(f"{name} must be a positive integer, got {raw!r}")
    return value


def get_worker_count() -> int:
    """
    Get the replication pool size

    Returns:
        int: RIGMOD_THREADS if set, otherwise the CPU count
    """
    return _positive_int('RIGMOD_THREADS', os.cpu_count() or 1)


def get_membership_cap() -> int:
    """
    Get the memory budget of a single incidence, in total memberships

    Returns:
        int: RIGMOD_MEMBERSHIP_CAP if set, otherwise 10^8
    """
    return _positive_int('RIGMOD_MEMBERSHIP_CAP', 100_000_000)


def get_exact_max_n() -> int:
    """Largest vertex count accepted by the exhaustive modularity oracle"""
    return _positive_int('RIGMOD_EXACT_MAX_N', 11)


def get_data_dir() -> Path:
    """Directory for sweep CSVs and charts written by the MCP server"""
    return Path(os.getenv('RIGMOD_DATA_DIR', str(DEFAULT_DATA_DIR)))
