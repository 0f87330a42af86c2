import pytest

from vmbwaves.core.collision import AzimuthalRule, assemble_collision
from vmbwaves.core.velocity import build_grid

SMALL_GRID = {"R": 6.0, "n_v1": 12, "n_r": 8}
SMALL_RULE = AzimuthalRule(n_tau=12, n_theta=8)

SMALL_CONFIG = """
[grid]
R = 6.0
n_v1 = 12
n_r = 8
n_tau = 12
n_theta = 8
"""


@pytest.fixture(scope="session")
def grid():
    return build_grid(**SMALL_GRID)


@pytest.fixture(scope="session")
def matrices(grid):
    return assemble_collision(grid, rule=SMALL_RULE)


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "vmbwaves.toml"
    path.write_text(SMALL_CONFIG)
    return path


@pytest.fixture(scope="session")
def medium_matrices():
    return assemble_collision(build_grid(R=8.0, n_v1=24, n_r=12))
