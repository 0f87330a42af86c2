import logging

import pytest

from conftest import SMALL_RULE
from vmbwaves.core import cache
from vmbwaves.core.cache import cache_path, cached_matrices, load_matrices, save_matrices
from vmbwaves.core.velocity import build_grid
from vmbwaves.exceptions import CacheError


def test_saved_matrices_load_back(tmp_path, grid, matrices):
    path = save_matrices(tmp_path / "m.npz", matrices, SMALL_RULE)
    loaded = load_matrices(path, grid, SMALL_RULE)
    assert loaded.mu == matrices.mu
    assert (loaded.L[1] == matrices.L[1]).all()


def test_header_mismatch(tmp_path, matrices):
    path = save_matrices(tmp_path / "m.npz", matrices, SMALL_RULE)
    with pytest.raises(CacheError, match="size"):
        load_matrices(path, build_grid(6.0, 12, 9), SMALL_RULE)


def test_cache_miss_assembles_once(tmp_path, monkeypatch, grid, matrices):
    calls = []

    def assemble(*args, **kwargs):
        calls.append(args)
        return matrices

    monkeypatch.setattr(cache, "assemble_collision", assemble)
    cached_matrices(grid, tmp_path, rule=SMALL_RULE)
    assert cache_path(tmp_path, grid, SMALL_RULE).exists()
    cached_matrices(grid, tmp_path, rule=SMALL_RULE)
    assert len(calls) == 1


def test_corrupt_cache_is_rebuilt(tmp_path, monkeypatch, grid, matrices, caplog):
    monkeypatch.setattr(cache, "assemble_collision", lambda *args, **kwargs: matrices)
    path = cache_path(tmp_path, grid, SMALL_RULE)
    path.write_bytes(b"not a container")
    with caplog.at_level(logging.WARNING):
        cached_matrices(grid, tmp_path, rule=SMALL_RULE)
    assert "Discarding matrix cache" in caplog.text
    assert load_matrices(path, grid, SMALL_RULE).mu == matrices.mu
