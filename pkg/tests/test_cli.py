import csv
import json

import numpy as np
import pytest
from typer.testing import CliRunner

import vmbwaves.cli as cli
from vmbwaves.cli import app
from vmbwaves.core.coefficients import compute_a1

runner = CliRunner()


@pytest.fixture
def cli_args(tmp_path, small_config):
    return ["--config", str(small_config), "--out", str(tmp_path / "out"), "--cache-dir", str(tmp_path / "cache")]


@pytest.mark.parametrize("args", [
    ["--backend", "taylor", "grid"],
    ["dispersion", "--regime", "middle"],
    ["interaction", "--lemma", "parabolic"],
    ["greens", "--system", "boltzmann", "--part", "low", "--block", "33"],
])
def test_bad_parameters_exit_with_usage_status(cli_args, args):
    result = runner.invoke(app, cli_args + args)
    assert result.exit_code == 2


def test_missing_config(tmp_path):
    result = runner.invoke(app, ["--config", str(tmp_path / "absent.toml"), "grid"])
    assert result.exit_code == 1
    assert "Critical error" in result.output


def test_grid_command(tmp_path, cli_args):
    result = runner.invoke(app, cli_args + ["grid"])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "out" / "grid.csv").read_text().splitlines()
    assert lines[0].startswith("# schema=1 config=")
    assert lines[1] == "v1,r,weight"
    assert len(lines) == 2 + 12 * 8


def test_coeffs_command(tmp_path, cli_args):
    result = runner.invoke(app, cli_args + ["coeffs"])
    assert result.exit_code == 0, result.output
    document = json.loads((tmp_path / "out" / "coeffs.json").read_text())
    assert document["a1"] > 0
    assert document["speeds"]["2"] == pytest.approx(1.290994, rel=1e-6)
    assert list((tmp_path / "cache").glob("collision-*.npz"))


def test_interaction_command(tmp_path, cli_args):
    result = runner.invoke(app, cli_args + ["interaction", "--lemma", "shift-algebraic", "--t", "4", "--t", "16"])
    assert result.exit_code == 0, result.output
    document = json.loads((tmp_path / "out" / "interaction-shift-algebraic.json").read_text())
    assert document["passed"] is True
    assert (tmp_path / "out" / "interaction-shift-algebraic.csv").exists()


def _csv_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# schema=1 config=")
    return list(csv.DictReader(lines[1:]))


def test_dispersion_low_branch_is_diffusive(tmp_path, cli_args, matrices):
    result = runner.invoke(app, cli_args + ["dispersion", "--regime", "low", "--xi", "0.01"])
    assert result.exit_code == 0, result.output
    rows = _csv_rows(tmp_path / "out" / "dispersion-low.csv")
    assert len(rows) == 1
    assert float(rows[0]["re"]) == pytest.approx(-compute_a1(matrices) * 1e-4, rel=0.02)


def test_mode_command(tmp_path, cli_args):
    result = runner.invoke(app, cli_args + ["mode", "--xi", "1.0", "--tmax", "2", "--steps", "2"])
    assert result.exit_code == 0, result.output
    rows = _csv_rows(tmp_path / "out" / "mode-xi1.csv")
    assert [float(row["t"]) for row in rows] == [0.0, 1.0, 2.0]
    for row in rows:
        assert float(row["constraint_residual"]) <= 1e-8 * float(row["norm"])


def test_greens_command(tmp_path, cli_args):
    args = ["greens", "--system", "boltzmann", "--part", "low", "--t", "2", "--t", "4", "--x-range", "-4:4:1"]
    result = runner.invoke(app, cli_args + args)
    assert result.exit_code == 0, result.output
    rows = _csv_rows(tmp_path / "out" / "greens-boltzmann-low.csv")
    assert len(rows) == 2 * 9
    assert {float(row["t"]) for row in rows} == {2.0, 4.0}
    assert all(float(row["norm"]) >= 0 for row in rows)


def test_waves_command(tmp_path, cli_args):
    result = runner.invoke(app, cli_args + ["waves", "--family", "Q", "--n", "1", "--t", "1", "--xi", "5"])
    assert result.exit_code == 0, result.output
    rows = _csv_rows(tmp_path / "out" / "waves-Q-n1.csv")
    assert [row["family"] for row in rows] == ["Q1", "Q2"]
    assert all(np.isfinite(float(row["ratio"])) for row in rows)


def test_verify_all_writes_a_summary(tmp_path, cli_args):
    result = runner.invoke(app, cli_args + ["verify-all"])
    assert result.exit_code in (0, 1), result.output
    document = json.loads((tmp_path / "out" / "verify-all.json").read_text())
    names = {check["name"] for check in document["checks"]}
    assert {"sector matrices vs tensor grid", "measured low-frequency radius r0", "null space residual"} <= names
    assert document["passed"] == (result.exit_code == 0)


def test_dispersion_drops_cached_resolvents(tmp_path, cli_args, monkeypatch):
    dropped = []
    clear = cli.clear_resolvent_cache
    monkeypatch.setattr(cli, "clear_resolvent_cache", lambda matrices, xi=None: dropped.append(clear(matrices, xi)))
    result = runner.invoke(app, cli_args + ["dispersion", "--regime", "low", "--xi", "0.05", "--xi", "0.1"])
    assert result.exit_code == 0, result.output
    assert len(dropped) == 1
    assert dropped[0] >= 2
