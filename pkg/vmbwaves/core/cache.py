# vmbwaves/core/cache.py
# On-disk cache of assembled collision matrices.
"""
One .npz container per grid: a JSON header (format version, node count, grid digest, azimuthal
rule) next to the sector arrays. A header that does not match the requested grid invalidates the
entry; it is rebuilt and overwritten.
"""
import json
import logging
from pathlib import Path

import numpy as np

from vmbwaves.core.collision import AzimuthalRule, CollisionMatrices, assemble_collision
from vmbwaves.core.velocity import VelocityGrid, build_basis
from vmbwaves.exceptions import CacheError

LOGGER = logging.getLogger(__name__)

FORMAT_VERSION = 1
SECTOR_ARRAYS = ("K", "K1", "L", "L1")


def cache_path(cache_dir: Path, grid: VelocityGrid, rule: AzimuthalRule) -> Path:
    return Path(cache_dir) / f"collision-{grid.digest()[:16]}-{rule.n_tau}x{rule.n_theta}.npz"


def _header(grid: VelocityGrid, rule: AzimuthalRule) -> dict:
    return {
        "version": FORMAT_VERSION,
        "size": grid.size,
        "grid": grid.digest(),
        "rule": [rule.n_tau, rule.n_theta],
    }


def save_matrices(path: Path, matrices: CollisionMatrices, rule: AzimuthalRule) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {f"{name}_{m}": getattr(matrices, name)[m] for name in SECTOR_ARRAYS for m in (0, 1)}
    header = _header(matrices.grid, rule) | {"mu": matrices.mu, "nu0": matrices.nu0, "nu1": matrices.nu1}
    with path.open("wb") as handle:
        np.savez_compressed(handle, header=np.array(json.dumps(header)), nu=matrices.nu, **arrays)
    LOGGER.info("Cached collision matrices in %s", path)
    return path


def load_matrices(path: Path, grid: VelocityGrid, rule: AzimuthalRule) -> CollisionMatrices:
    """Reads a container written by save_matrices; raises CacheError on any mismatch."""
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            expected = _header(grid, rule)
            for key, value in expected.items():
                if header.get(key) != value:
                    raise CacheError(f"{path.name}: header field {key!r} is {header.get(key)!r}, expected {value!r}")
            sectors = {name: {m: data[f"{name}_{m}"] for m in (0, 1)} for name in SECTOR_ARRAYS}
            nu = data["nu"]
    except (OSError, KeyError, ValueError) as e:
        raise CacheError(f"Unreadable matrix cache {path}: {e}") from e

    for name, blocks in sectors.items():
        for m, block in blocks.items():
            if block.shape != (grid.size, grid.size):
                raise CacheError(f"{path.name}: {name}[{m}] has shape {block.shape}")
    return CollisionMatrices(
        grid=grid,
        basis=build_basis(grid),
        nu=nu,
        mu=float(header["mu"]),
        nu0=float(header["nu0"]),
        nu1=float(header["nu1"]),
        **sectors,
    )


def cached_matrices(grid: VelocityGrid, cache_dir: Path | None, *, rule: AzimuthalRule = AzimuthalRule(),
                    threads: int = 1) -> CollisionMatrices:
    """Loads the matrices for this grid from cache_dir, assembling (and storing) them on a miss."""
    if cache_dir is None:
        return assemble_collision(grid, rule=rule, threads=threads)
    path = cache_path(cache_dir, grid, rule)
    if path.exists():
        try:
            return load_matrices(path, grid, rule)
        except CacheError as e:
            LOGGER.warning("Discarding matrix cache: %s", e)
    matrices = assemble_collision(grid, rule=rule, threads=threads)
    save_matrices(path, matrices, rule)
    return matrices
