#!/usr/bin/env python3

import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

# Add the parent directory of 'vmbwaves' to sys.path
# This allows running cli.py directly when it's part of a package
current_file_path = Path(__file__).resolve()
project_root = current_file_path.parent.parent
sys.path.insert(0, str(project_root))

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler

from vmbwaves.backends import BACKENDS, PropagatorBackend, get_backend
from vmbwaves.core.cache import cached_matrices
from vmbwaves.core.checks import run_checks
from vmbwaves.core.coefficients import coefficient_report
from vmbwaves.core.collision import AzimuthalRule, CollisionMatrices
from vmbwaves.core.config import RunConfig, load_run_config
from vmbwaves.core.dispersion import boltzmann_branches, clear_resolvent_cache, solve_high_branch, solve_low_branch
from vmbwaves.core.fitting import power_exponent
from vmbwaves.core.greens import (
    F_alpha,
    block_groups,
    boltzmann_fluid_kernel,
    fluid_low_kernel,
    high_fluid_kernel,
    middle_green,
    singular_short_wave,
)
from vmbwaves.core.interaction import KINDS, LEMMAS, WaveParams, certify_bounds, get_lemma, monte_carlo, ray_scan
from vmbwaves.core.kinetic import (
    YZ_split,
    boltzmann_wave_remainder,
    bound_envelope,
    mixture_norms,
)
from vmbwaves.core.modes import (
    ModeState,
    admissible_embedding,
    assemble,
    decompose_semigroup,
    layout_for,
    propagate,
    xi_norm,
)
from vmbwaves.core.velocity import VelocityGrid, build_grid
from vmbwaves.exceptions import VmbWavesError
from vmbwaves.ui.report import checks_table, key_value_table, rows_table, write_csv, write_json

app = typer.Typer(help="Spectral and Green's function studies of the linearized Vlasov-Maxwell-Boltzmann system.")
console = Console()

REGIMES = ("low", "high", "boltzmann")
SYSTEMS = ("vmb", "boltzmann")
PARTS = ("low", "high", "F", "G2", "middle")
WAVE_FAMILIES = {
    "M": ("M",),
    "Q": ("Q1", "Q2"),
    "U": ("U", "U1", "U2"),
    "YZ": ("Z",),
    "boltzmann": ("M_boltz",),
}


@dataclass
class Session:
    config: RunConfig
    backend: PropagatorBackend
    verbose: bool = False

    @property
    def out_dir(self) -> Path:
        return Path(self.config.run.out_dir)

    @property
    def config_hash(self) -> str:
        return self.config.digest()


def _choice(value: str, choices, flag: str) -> str:
    if value not in choices:
        raise typer.BadParameter(f"{value!r} is not one of {', '.join(choices)}", param_hint=flag)
    return value


def _floats(values: Optional[List[float]], fallback) -> list[float]:
    return [float(value) for value in (values or fallback)]


@contextmanager
def reporting(session: Session):
    """Maps library failures to a red diagnostic and exit status 1."""
    try:
        yield
    except (typer.Exit, typer.Abort, typer.BadParameter):
        raise
    except VmbWavesError as e:
        console.print(f"[bold red]Error: {e}[/bold red]")
        if session.verbose:
            console.print_exception()
        raise typer.Exit(1)
    except Exception:
        console.print("[bold red]An unexpected error occurred:[/bold red]")
        # For truly unexpected errors, show the full traceback
        console.print_exception(show_locals=True)
        raise typer.Exit(1)


def _grid(config: RunConfig) -> VelocityGrid:
    settings = config.grid
    return build_grid(settings.R, settings.n_v1, settings.n_r)


def _matrices(session: Session, grid: VelocityGrid | None = None) -> CollisionMatrices:
    config = session.config
    grid = grid or _grid(config)
    rule = AzimuthalRule(n_tau=config.grid.n_tau, n_theta=config.grid.n_theta)
    console.print(f"  -> Collision matrices on [bold cyan]{grid.size}[/bold cyan] nodes")
    with console.status("Assembling (or loading) collision matrices..."):
        matrices = cached_matrices(grid, Path(config.run.cache_dir), rule=rule, threads=config.run.threads)
    console.print(f"  [dim]spectral gap mu={matrices.mu:.6g}, nu0={matrices.nu0:.4g}, nu1={matrices.nu1:.4g}[/dim]")
    return matrices


def _written(path: Path) -> None:
    console.print(f"[green]Wrote {path}[/green]")


@app.callback()
def main(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="TOML run configuration."),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory for CSV/JSON artifacts."),
    cache_dir: Optional[Path] = typer.Option(None, "--cache-dir", help="Directory of cached collision matrices."),
    threads: Optional[int] = typer.Option(None, "--threads", "-j", help="Worker threads for matrix assembly."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for random probe vectors."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress at DEBUG level."),
    backend: str = typer.Option("eigen", "--backend", "-b", help="Propagation engine: 'eigen' or 'expm'."),
):
    """
    Builds the run configuration shared by every subcommand.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, rich_tracebacks=True)],
        force=True,
    )
    _choice(backend, tuple(BACKENDS), "--backend")
    try:
        run_config = load_run_config(config).with_run(
            out_dir=str(out) if out else None,
            cache_dir=str(cache_dir) if cache_dir else None,
            threads=threads,
            seed=seed,
        )
    except (FileNotFoundError, KeyError) as e:
        console.print(f"[bold red]Critical error: {e.args[0] if e.args else e}[/bold red]")
        raise typer.Exit(1)
    except VmbWavesError as e:
        console.print(f"[bold red]Error in the run configuration: {e}[/bold red]")
        raise typer.Exit(1)
    ctx.obj = Session(config=run_config, backend=get_backend(backend), verbose=verbose)


@app.command()
def grid(ctx: typer.Context):
    """
    Exports the velocity nodes and their weights as CSV.
    """
    session: Session = ctx.obj
    with reporting(session):
        velocity_grid = _grid(session.config)
        path = write_csv(session.out_dir / "grid.csv", velocity_grid.rows(), session.config_hash)
        console.print(f"  -> {velocity_grid.size} nodes, grid hash [dim]{velocity_grid.digest()[:16]}[/dim]")
        _written(path)


@app.command()
def coeffs(ctx: typer.Context):
    """
    Computes a1, the A_j and the characteristic speeds.
    """
    session: Session = ctx.obj
    with reporting(session):
        matrices = _matrices(session)
        report = coefficient_report(matrices)
        data = report.to_dict()
        summary = {"a1": report.a1, **{f"A_{j}": value for j, value in report.A.items()},
                   **{f"speed_{j}": value for j, value in report.speeds.items()}, "mu": report.mu}
        console.print(key_value_table("Transport coefficients", summary))
        _written(write_json(session.out_dir / "coeffs.json", data, session.config_hash))


@app.command()
def dispersion(
    ctx: typer.Context,
    regime: str = typer.Option("low", "--regime", "-r", help="Branch family: 'low', 'high' or 'boltzmann'."),
    xi: Optional[List[float]] = typer.Option(None, "--xi", help="Frequency sample; repeat for more."),
):
    """
    Solves the dispersion relation along one family of branches.
    """
    session: Session = ctx.obj
    _choice(regime, REGIMES, "--regime")
    samples = session.config.samples
    fallback = {"low": samples.low_xi, "high": samples.high_xi, "boltzmann": samples.boltzmann_xi}[regime]
    xis = _floats(xi, fallback)
    with reporting(session):
        matrices = _matrices(session)
        console.print(f"  -> Solving the [bold]{regime}[/bold] branches at {len(xis)} frequencies")
        if regime == "low":
            branches = [solve_low_branch(xis, matrices)]
        elif regime == "high":
            branches = [solve_high_branch(xis, sign, matrices) for sign in (-1, 1)]
        else:
            branches = boltzmann_branches(xis, matrices)
        clear_resolvent_cache(matrices)
        rows = [{"label": branch.label, **row} for branch in branches for row in branch.to_rows()]
        console.print(rows_table(f"{regime} dispersion branches", rows))
        _written(write_csv(session.out_dir / f"dispersion-{regime}.csv", rows, session.config_hash))


@app.command()
def mode(
    ctx: typer.Context,
    xi: float = typer.Option(1.0, "--xi", help="Frequency of the mode."),
    tmax: float = typer.Option(30.0, "--tmax", help="Final time."),
    steps: int = typer.Option(30, "--steps", help="Number of time steps."),
):
    """
    Propagates a random admissible mode and records its norm, Gauss-law residual and remainder.
    """
    session: Session = ctx.obj
    config = session.config
    with reporting(session):
        matrices = _matrices(session)
        rng = np.random.default_rng(config.run.seed)
        reduced = layout_for("A1", matrices)
        vector = rng.standard_normal(reduced.size) + 1j * rng.standard_normal(reduced.size)
        full = admissible_embedding(xi, matrices) @ vector
        u0 = ModeState.from_vector(full, layout_for("A0", matrices), xi)
        generator = assemble("A0", xi, matrices)

        console.print(f"  -> Propagating an admissible mode at xi={xi:g} up to t={tmax:g}")
        rows = []
        for t in np.linspace(0.0, tmax, steps + 1):
            state = propagate(generator, float(t), u0, session.backend)
            parts = decompose_semigroup(xi, float(t), matrices, r0=config.regimes.r0, r1=config.regimes.r1,
                                        backend=session.backend)
            rows.append({
                "t": float(t),
                "norm": state.norm(matrices),
                "constraint_residual": state.constraint_residual(matrices),
                "remainder_norm": xi_norm(parts.S3, xi, matrices, reduced),
                "regime": parts.regime,
            })
        console.print(rows_table(f"Mode at xi={xi:g}", rows))
        _written(write_csv(session.out_dir / f"mode-xi{xi:g}.csv", rows, session.config_hash))


def _green_field(system: str, part: str, times, x, alpha: float, matrices: CollisionMatrices, session: Session):
    regimes = session.config.regimes
    if system == "boltzmann":
        if part != "low":
            raise typer.BadParameter("the Boltzmann system only has the 'low' fluid part", param_hint="--part")
        return boltzmann_fluid_kernel(times, x, matrices, r0=regimes.boltzmann_r0)
    if part == "low":
        return fluid_low_kernel(times, x, matrices, r0=regimes.r0)
    if part == "high":
        return high_fluid_kernel(times, x, matrices, r1=regimes.r1, xi_max=regimes.xi_max)
    if part == "F":
        return F_alpha(times, x, alpha, matrices, r1=regimes.r1, xi_max=regimes.xi_max)
    return middle_green(times, x, matrices, r0=regimes.r0, r1=regimes.r1, backend=session.backend)


def _x_range(value: Optional[str], session: Session) -> np.ndarray:
    samples = session.config.samples
    if value is None:
        lower, upper, step = samples.x_min, samples.x_max, samples.x_step
    else:
        try:
            lower, upper, step = (float(part) for part in value.split(":"))
        except ValueError:
            raise typer.BadParameter(f"{value!r} is not of the form min:max:step", param_hint="--x-range") from None
        if step <= 0 or upper <= lower:
            raise typer.BadParameter("the range must be increasing with a positive step", param_hint="--x-range")
    return np.arange(lower, upper + 0.5 * step, step)


@app.command()
def greens(
    ctx: typer.Context,
    system: str = typer.Option("vmb", "--system", "-s", help="'vmb' or 'boltzmann'."),
    part: str = typer.Option("low", "--part", "-p", help="'low', 'high', 'F', 'G2' or 'middle'."),
    t: Optional[List[float]] = typer.Option(None, "--t", help="Sample time; repeat for more."),
    x_range: Optional[str] = typer.Option(None, "--x-range", help="Positions as min:max:step."),
    alpha: float = typer.Option(1.0, "--alpha", help="Smoothing order of the F and G2 parts."),
    block: Optional[str] = typer.Option(None, "--block", help="VMB block such as '33' (rows f=1, E=2, B=3)."),
):
    """
    Synthesizes one part of the Green's function on a (t, x) grid.
    """
    session: Session = ctx.obj
    _choice(system, SYSTEMS, "--system")
    _choice(part, PARTS, "--part")
    times = _floats(t, session.config.samples.times)
    x = _x_range(x_range, session)
    groups = (None, None)
    if block is not None:
        if system != "vmb":
            raise typer.BadParameter("blocks are only defined for the vmb system", param_hint="--block")
        try:
            groups = block_groups(block)
        except VmbWavesError as e:
            raise typer.BadParameter(str(e), param_hint="--block") from None

    with reporting(session):
        matrices = _matrices(session)
        console.print(f"  -> Synthesizing the [bold]{system}[/bold] part [bold]{part}[/bold] "
                      f"on {len(times)} times x {x.size} positions")
        regimes = session.config.regimes
        if part == "G2" and system == "vmb":
            rows = []
            for time in times:
                wave = singular_short_wave(time, x, alpha, matrices, r1=regimes.r1, xi_max=regimes.xi_max)
                rows.extend(wave.as_field().to_rows(*groups))
                console.print(f"  [dim]t={time:g}: delta weights at x=+-{time:g}, "
                              f"sizes {np.abs(wave.weights).max(axis=(1, 2))}[/dim]")
        else:
            field = _green_field(system, part, times, x, alpha, matrices, session)
            rows = field.to_rows(*groups)
            sup = field.sup_norms(*groups)
            summary = {f"sup_x |G|(t={time:g})": value for time, value in zip(field.times, sup)}
            if len(times) > 1:
                summary["time exponent"] = power_exponent(field.times, sup)
            console.print(key_value_table(f"{field.label} summary", summary))
        path = write_csv(session.out_dir / f"greens-{system}-{part}.csv", rows, session.config_hash)
        _written(path)


@app.command()
def waves(
    ctx: typer.Context,
    family: str = typer.Option("M", "--family", "-f", help="'M', 'Q', 'U', 'YZ' or 'boltzmann'."),
    n: int = typer.Option(3, "--n", help="Hierarchy level."),
    t: Optional[List[float]] = typer.Option(None, "--t", help="Sample time; repeat for more."),
    xi: Optional[List[float]] = typer.Option(None, "--xi", help="Frequency sample; repeat for more."),
):
    """
    Tabulates mixture and Picard operator norms against their reference envelopes.
    """
    session: Session = ctx.obj
    _choice(family, tuple(WAVE_FAMILIES), "--family")
    times = _floats(t, (1.0, 2.0, 4.0))
    xis = _floats(xi, (5.0, 20.0, 80.0))
    with reporting(session):
        matrices = _matrices(session)
        rows = []
        constants = {}
        for member in WAVE_FAMILIES[family]:
            console.print(f"  -> {member}_{n} on {len(times)} x {len(xis)} samples")
            norms = mixture_norms(member, n, times, xis, matrices)
            grid_t, grid_xi = np.meshgrid(times, xis, indexing="ij")
            envelope = bound_envelope(member, n, grid_t, grid_xi, matrices.nu0)
            ratios = norms / envelope
            constants[f"C({member}_{n})"] = float(ratios.max())
            for a, time in enumerate(times):
                for b, frequency in enumerate(xis):
                    rows.append({"family": member, "n": n, "t": time, "xi": frequency, "norm": norms[a, b],
                                 "envelope": envelope[a, b], "ratio": ratios[a, b]})

        extras = []
        for time in times:
            for frequency in xis:
                if family == "YZ":
                    split = YZ_split(n, time, frequency, matrices, session.backend).to_dict()
                    defect = split.pop("defect")
                    extras.append({**split, **{f"defect_{key}": value for key, value in defect.items()}})
                elif family == "boltzmann":
                    remainder = boltzmann_wave_remainder(n, time, frequency, matrices,
                                                         r0=session.config.regimes.boltzmann_r0,
                                                         backend=session.backend)
                    extras.append({"t": time, "xi": frequency, "remainder_norm": remainder.norm})

        console.print(key_value_table(f"Envelope constants ({family})", constants))
        _written(write_csv(session.out_dir / f"waves-{family}-n{n}.csv", rows, session.config_hash))
        if extras:
            console.print(rows_table(f"{family} remainder", extras))
            _written(write_csv(session.out_dir / f"waves-{family}-n{n}-remainder.csv", extras, session.config_hash))


@app.command()
def interaction(
    ctx: typer.Context,
    lemma: str = typer.Option("diffusive", "--lemma", "-l", help=f"One of: {', '.join(LEMMAS)}."),
    alpha: float = typer.Option(2.0, "--alpha"),
    beta: float = typer.Option(2.0, "--beta"),
    gamma: float = typer.Option(1.5, "--gamma"),
    lam: float = typer.Option(0.0, "--lam", help="Speed of the first wave."),
    mu: float = typer.Option(1.0, "--mu", help="Speed of the second wave (cross bounds only)."),
    diffusion: float = typer.Option(1.0, "--D", help="Gaussian width constant."),
    nu0: float = typer.Option(1.0, "--nu0", help="Damping rate of the localized kernels."),
    t: Optional[List[float]] = typer.Option(None, "--t", help="Sample time; repeat for more."),
    count: int = typer.Option(11, "--count", help="Positions per time before refinement."),
    samples: int = typer.Option(0, "--monte-carlo", help="Monte-Carlo samples for an independent estimate (0 = off)."),
    rays: bool = typer.Option(False, "--rays", help="Also scan bound ratios along rays x = ct."),
):
    """
    Certifies one space-time interaction bound on a refined sample grid.
    """
    session: Session = ctx.obj
    _choice(lemma, tuple(LEMMAS), "--lemma")
    params = WaveParams(alpha=alpha, beta=beta, gamma=gamma, lam=lam, mu=mu, D=diffusion, nu0=nu0)
    times = _floats(t, (4.0, 16.0, 64.0))
    with reporting(session):
        console.print(f"  -> Certifying [bold]{lemma}[/bold] at t in {times}")
        certification = certify_bounds(lemma, params, times, count)
        fine = certification.fine
        rows = [
            {"t": time, "x": x, "value": value, "bound": bound, "ratio": value / bound}
            for time, xs, values, bounds in zip(fine.times, fine.positions, fine.values, fine.bounds)
            for x, value, bound in zip(xs, values, bounds)
        ]
        summary = certification.to_dict()

        kind = get_lemma(lemma).kind
        if samples > 0 and kind in KINDS:
            index = int(np.argmax(fine.ratios[-1]))
            time, x = float(fine.times[-1]), float(fine.positions[-1][index])
            estimate = monte_carlo(kind, certification.params, time, x, samples=samples, seed=session.config.run.seed)
            value = float(fine.values[-1][index])
            summary["monte_carlo"] = {"t": time, "x": x, "quadrature": value, "mean": estimate.mean,
                                      "stderr": estimate.stderr, "agrees": estimate.agrees(value)}
            colour = "green" if estimate.agrees(value) else "bold red"
            console.print(f"  [{colour}]Monte-Carlo {estimate.mean:.6g} +- {estimate.stderr:.2g} "
                          f"vs quadrature {value:.6g}[/{colour}]")

        if rays:
            scan = ray_scan(lemma, certification.params, times)
            summary["rays"] = {f"{speed:g}": float(np.max(ratios)) for speed, ratios in scan.items()}

        console.print(key_value_table(f"{lemma}", {key: value for key, value in summary.items()
                                                   if isinstance(value, (int, float, bool))}))
        _written(write_csv(session.out_dir / f"interaction-{lemma}.csv", rows, session.config_hash))
        _written(write_json(session.out_dir / f"interaction-{lemma}.json", summary, session.config_hash))
        if not certification.passed:
            console.print(f"[bold red]{lemma}: the bound ratio moved by {certification.change:.1%} "
                          f"under refinement[/bold red]")
            raise typer.Exit(1)


@app.command(name="verify-all")
def verify_all(
    ctx: typer.Context,
    refine: bool = typer.Option(False, "--refine", help="Also assemble a doubled grid for the gap stability check."),
):
    """
    Runs the acceptance checks and writes a pass/fail summary.
    """
    session: Session = ctx.obj
    config = session.config
    with reporting(session):
        matrices = _matrices(session)
        refined = None
        if refine:
            settings = config.grid
            refined = _matrices(session, build_grid(settings.R, 2 * settings.n_v1, 2 * settings.n_r))

        results = run_checks(matrices, config, refined=refined, backend=session.backend,
                             progress=lambda name: console.print(f"  -> Checking {name}"))
        console.print(checks_table([result.to_dict() for result in results]))
        failed = [result.name for result in results if not result.passed]
        payload = {"passed": not failed, "failed": failed, "checks": [result.to_dict() for result in results]}
        _written(write_json(session.out_dir / "verify-all.json", payload, session.config_hash))
        if failed:
            console.print(f"[bold red]{len(failed)} of {len(results)} checks failed.[/bold red]")
            raise typer.Exit(1)
        console.print(f"\n[bold green]All {len(results)} checks passed.[/bold green]")


if __name__ == "__main__":
    app()
