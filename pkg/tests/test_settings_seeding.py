import numpy as np
import pytest

from rigmod.seeding import as_generator, derive_seed, make_rng
from rigmod.settings import DEFAULT_DATA_DIR, get_data_dir, get_exact_max_n, get_membership_cap, \
    get_worker_count


def test_defaults(monkeypatch):
    for name in ("RIGMOD_THREADS", "RIGMOD_MEMBERSHIP_CAP", "RIGMOD_EXACT_MAX_N", "RIGMOD_DATA_DIR"):
        monkeypatch.delenv(name, raising=False)
    assert get_worker_count() >= 1
    assert get_membership_cap() == 100_000_000
    assert get_exact_max_n() == 11
    assert get_data_dir() == DEFAULT_DATA_DIR


def test_environment_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("RIGMOD_THREADS", "3")
    monkeypatch.setenv("RIGMOD_EXACT_MAX_N", " ")
    monkeypatch.setenv("RIGMOD_DATA_DIR", str(tmp_path))
    assert get_worker_count() == 3
    assert get_exact_max_n() == 11
    assert get_data_dir() == tmp_path


@pytest.mark.parametrize("raw", ["0", "-2", "four"])
def test_invalid_environment(monkeypatch, raw):
    monkeypatch.setenv("RIGMOD_MEMBERSHIP_CAP", raw)
    with pytest.raises(ValueError, match="RIGMOD_MEMBERSHIP_CAP"):
        get_membership_cap()


def test_streams_depend_only_on_keys():
    first = make_rng(7, 2, 3).random(5)
    assert np.array_equal(first, make_rng(7, 2, 3).random(5))
    assert not np.array_equal(first, make_rng(7, 3, 2).random(5))
    assert not np.array_equal(first, make_rng(8, 2, 3).random(5))


def test_derived_seeds():
    assert derive_seed(1, 0, 0) == derive_seed(1, 0, 0)
    seeds = {derive_seed(1, g, r) for g in range(5) for r in range(20)}
    assert len(seeds) == 100
    assert all(0 <= seed < 2 ** 64 for seed in seeds)


def test_as_generator():
    rng = make_rng(3)
    assert as_generator(rng) is rng
    assert np.array_equal(as_generator(3).random(3), make_rng(3).random(3))
    assert isinstance(as_generator(None), np.random.Generator)
