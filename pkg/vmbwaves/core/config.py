# vmbwaves/core/config.py
import hashlib
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import toml

from vmbwaves.exceptions import ConfigurationError

CONFIG_FILE = Path.cwd() / "vmbwaves.toml"
REQUIRED_SECTIONS = ("grid",)


@dataclass(frozen=True)
class GridSettings:
    R: float = 8.0
    n_v1: int = 30
    n_r: int = 16
    n_tau: int = 24
    n_theta: int = 16


@dataclass(frozen=True)
class RegimeSettings:
    r0: float = 0.5
    r1: float = 10.0
    boltzmann_r0: float = 1.0
    xi_max: float = 400.0
    scan: tuple[float, ...] = (0.1, 0.2, 0.3, 0.5, 0.8, 1.2, 2.0, 4.0, 6.0, 10.0, 15.0, 20.0)


@dataclass(frozen=True)
class SampleSettings:
    low_xi: tuple[float, ...] = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2)
    high_xi: tuple[float, ...] = (20.0, 50.0, 100.0, 300.0)
    boltzmann_xi: tuple[float, ...] = (0.0, 0.02, 0.05, 0.1, 0.2, 0.4)
    times: tuple[float, ...] = (10.0, 20.0, 40.0)
    x_min: float = -40.0
    x_max: float = 40.0
    x_step: float = 0.25


@dataclass(frozen=True)
class RunSettings:
    out_dir: str = "out"
    cache_dir: str = ".vmbwaves-cache"
    threads: int = 1
    seed: int = 20240601


@dataclass(frozen=True)
class RunConfig:
    grid: GridSettings = field(default_factory=GridSettings)
    regimes: RegimeSettings = field(default_factory=RegimeSettings)
    samples: SampleSettings = field(default_factory=SampleSettings)
    run: RunSettings = field(default_factory=RunSettings)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """sha256 of the canonical TOML dump; embedded in every artifact."""
        canonical = toml.dumps(_plain(self.to_dict()))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_run(self, **overrides) -> "RunConfig":
        """Copy with selected [run] values replaced (CLI flags win over the file)."""
        kept = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, run=replace(self.run, **kept))


def _plain(data):
    if isinstance(data, dict):
        return {key: _plain(value) for key, value in data.items()}
    if isinstance(data, tuple):
        return list(data)
    return data


def _section(cls, raw: dict, name: str):
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigurationError(f"Unknown keys in [{name}]: {', '.join(sorted(unknown))}")
    values = {}
    for key, value in raw.items():
        if isinstance(value, list):
            value = tuple(float(item) for item in value)
        values[key] = value
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigurationError(f"Invalid [{name}] section: {e}") from e


def validate(config: RunConfig) -> RunConfig:
    grid = config.grid
    if grid.R <= 0 or grid.n_v1 < 1 or grid.n_r < 1:
        raise ConfigurationError(
            f"Grid needs R > 0 and positive node counts (got R={grid.R}, n_v1={grid.n_v1}, n_r={grid.n_r})"
        )
    regimes = config.regimes
    if not 0 < regimes.r0 < regimes.r1:
        raise ConfigurationError(f"Regime bounds must satisfy 0 < r0 < r1 (got {regimes.r0}, {regimes.r1})")
    if config.samples.x_step <= 0 or config.samples.x_max <= config.samples.x_min:
        raise ConfigurationError("The x sample range must be increasing with a positive step")
    if config.run.threads < 1:
        raise ConfigurationError("threads must be at least 1")
    return config


def load_run_config(path: Path | None = None) -> RunConfig:
    """Loads a RunConfig from a TOML file; without a path the defaults are used
    unless ./vmbwaves.toml exists."""
    if path is None:
        if not CONFIG_FILE.exists():
            return RunConfig()
        path = CONFIG_FILE
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path.name} not found. Pass --config with an existing TOML file.")

    full_config = toml.load(path)
    for name in REQUIRED_SECTIONS:
        if name not in full_config:
            raise KeyError(f"The required [{name}] section was not found in {path.name}")

    unknown = set(full_config) - {"grid", "regimes", "samples", "run"}
    if unknown:
        raise ConfigurationError(f"Unknown sections in {path.name}: {', '.join(sorted(unknown))}")

    return validate(
        RunConfig(
            grid=_section(GridSettings, full_config["grid"], "grid"),
            regimes=_section(RegimeSettings, full_config.get("regimes", {}), "regimes"),
            samples=_section(SampleSettings, full_config.get("samples", {}), "samples"),
            run=_section(RunSettings, full_config.get("run", {}), "run"),
        )
    )
