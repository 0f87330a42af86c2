import pytest

from vmbwaves.core import config as config_module
from vmbwaves.core.config import RunConfig, load_run_config
from vmbwaves.exceptions import ConfigurationError


def _write(tmp_path, text):
    path = tmp_path / "run.toml"
    path.write_text(text)
    return path


def test_load_small_config(small_config):
    config = load_run_config(small_config)
    assert config.grid.R == 6.0
    assert config.grid.n_tau == 12
    assert config.regimes == RunConfig().regimes


def test_defaults_without_a_file(tmp_path, monkeypatch):
    monkeypatch.setattr(config_module, "CONFIG_FILE", tmp_path / "vmbwaves.toml")
    assert load_run_config() == RunConfig()


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_run_config(tmp_path / "absent.toml")


def test_missing_grid_section(tmp_path):
    with pytest.raises(KeyError):
        load_run_config(_write(tmp_path, "[run]\nthreads = 2\n"))


@pytest.mark.parametrize("text", [
    "[grid]\nR = 6.0\n[plots]\ndpi = 100\n",
    "[grid]\nR = 6.0\nn_phi = 3\n",
    "[grid]\n[regimes]\nr0 = 12.0\nr1 = 10.0\n",
    "[grid]\n[samples]\nx_step = 0.0\n",
    "[grid]\n[run]\nthreads = 0\n",
])
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ConfigurationError):
        load_run_config(_write(tmp_path, text))


def test_lists_become_tuples(tmp_path):
    config = load_run_config(_write(tmp_path, "[grid]\n[samples]\ntimes = [1, 2]\n"))
    assert config.samples.times == (1.0, 2.0)


def test_run_overrides_and_digest():
    config = RunConfig()
    same = config.with_run(out_dir=None, threads=None)
    assert same == config
    assert same.digest() == config.digest()
    changed = config.with_run(threads=4)
    assert changed.run.threads == 4
    assert changed.digest() != config.digest()
