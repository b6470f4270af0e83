import logging
import sys
import uuid
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import click
import numpy as np
from dotenv import load_dotenv

from ...application.services import CurveService, EvolutionService, ProfileSolver, SpectralAnalyzer, VerificationService
from ...application.services.evolution_service import default_time_step
from ...application.services.profile_service import smoothness_check
from ...domain import spectral
from ...domain.entities import (
    ComplexField,
    CriterionStatus,
    Equation,
    EvolutionConfig,
    RealField,
    SolverOptions,
    SweepConfig,
    Verdict,
    WaveProfile,
)
from ...domain.exceptions import BlowUpError, ConfigError, FracwaveError, NumericalFailure
from ...infrastructure.parallel import default_jobs, run_jobs
from ...infrastructure.storage import FileRepository
from .config import RunConfig, Subcommand, parse_config

EXIT_OK = 0
EXIT_CRITERION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

load_dotenv()

logger = logging.getLogger(__name__)


@click.group()
@click.option('--jobs', type=int, envvar='FRACWAVE_JOBS', default=None, help='Worker threads (default: logical cores)')
@click.option('--log-level', envvar='FRACWAVE_LOG_LEVEL', default='INFO',
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False), help='Logging level')
@click.option('--seed', type=int, default=None, help='Seed of every random draw')
@click.pass_context
def cli(ctx, jobs, log_level, seed):
    """Periodic waves of fractional KdV / NLS: profiles, spectra, curves and evolution."""
    logging.basicConfig(level=getattr(logging, log_level.upper()), format=LOG_FORMAT)
    ctx.ensure_object(dict)
    ctx.obj['jobs'] = jobs if jobs is not None else default_jobs()
    ctx.obj['seed'] = seed


def _run(subcommand: Subcommand, flags: Dict[str, Any], config_file: Optional[str], action: Callable[[RunConfig], int]) -> None:
    """Parse the configuration, run `action` and map failures to exit codes."""
    try:
        run_config = parse_config(subcommand, flags, config_file)
        code = action(run_config)
    except ConfigError as e:
        click.secho(f"Configuration error: {str(e)}", fg="red", err=True)
        code = EXIT_USAGE
    except NumericalFailure as e:
        click.secho(f"Numerical failure: {str(e)}", fg="red", err=True)
        logger.error(f"{subcommand.value} failed: {str(e)}")
        code = EXIT_NUMERICAL
    except FracwaveError as e:
        click.secho(f"Error: {str(e)}", fg="red", err=True)
        logger.error(f"{subcommand.value} failed: {str(e)}")
        code = EXIT_NUMERICAL
    except (ValueError, OSError) as e:
        click.secho(f"Invalid input: {str(e)}", fg="red", err=True)
        code = EXIT_USAGE
    sys.exit(code)


def _output(run_config: RunConfig, default: str) -> str:
    return run_config.output_paths.get('out', default)


def _profile_id(run_config: RunConfig) -> str:
    """Identifier derived from the configuration, so repeated runs write identical files."""
    return str(uuid.uuid5(uuid.NAMESPACE_URL, f"fracwave:{run_config.model_dump_json()}"))


@cli.command()
@click.option('--alpha', type=float, help='Dispersion order in (1/2, 2]')
@click.option('--lambda', 'lam', type=float, help='Squared L^2 norm of the wave')
@click.option('--a', 'a_param', type=float, help='Integration constant a')
@click.option('--half-period', type=float, help='Half period T')
@click.option('--n', 'n_points', type=int, help='Grid size (power of two)')
@click.option('--tol', type=float, help='Newton residual target')
@click.option('--seeds', type=int, help='Multi-start seeds')
@click.option('--out', default=None, help='Profile JSON path')
@click.option('--config', 'config_file', default=None, help='JSON config file; flags override it')
@click.pass_context
def solve(ctx, alpha, lam, a_param, half_period, n_points, tol, seeds, out, config_file):
    """Compute the constrained energy minimizer for (alpha, lambda, a)."""
    flags = {'alpha': alpha, 'lambda': lam, 'a': a_param, 'half_period': half_period, 'n': n_points,
             'tol': tol, 'seeds': seeds, 'out': out, 'rng_seed': ctx.obj['seed']}

    def action(run_config: RunConfig) -> int:
        params = run_config.parameters
        grid = spectral.make_grid(params.n, params.half_period)
        options = SolverOptions(newton_tol=params.tol, seeds=params.seeds, max_iters=params.max_iters,
                                rng_seed=run_config.rng_seed, jobs=ctx.obj['jobs'])
        click.echo(f"Solving alpha={params.alpha}, lambda={params.lambda_}, a={params.a}, T={params.half_period}, N={params.n}...")
        profile, diagnostics = ProfileSolver(options).solve(params.lambda_, params.a, params.alpha, grid)
        profile = profile.model_copy(update={'profile_id': _profile_id(run_config)})
        smoothness = smoothness_check(profile.phi)

        repository = FileRepository()
        target = Path(_output(run_config, 'profile.json'))
        repository.save_profile(profile, target)
        repository.save_json(diagnostics.model_dump(), target.with_name(target.stem + '_diagnostics.json'))

        _display_profile(profile)
        if not smoothness.resolved:
            click.secho(f"Warning: tail coefficients at {smoothness.tail_level:.2e}, increase N", fg="yellow")
        if diagnostics.seed_disagreement > 1e-8:
            click.secho(f"Warning: multi-start energies disagree by {diagnostics.seed_disagreement:.2e}", fg="yellow")
        if not profile.converged:
            click.secho("Solver stopped before meeting its tolerance", fg="red")
            return EXIT_NUMERICAL
        return EXIT_OK

    _run(Subcommand.SOLVE, flags, config_file, action)


@cli.command()
@click.option('--profile', 'profile_path', default=None, help='Profile JSON written by solve')
@click.option('--n-eigs', default=None, help="Eigenvalues to list, or 'all'")
@click.option('--problem', type=click.Choice(['kdv', 'nls']), default=None, help='Linearization to analyze')
@click.option('--out', default=None, help='Report JSON path')
@click.option('--config', 'config_file', default=None, help='JSON config file; flags override it')
@click.pass_context
def spectrum(ctx, profile_path, n_eigs, problem, out, config_file):
    """Spectral report of a stored profile."""
    flags = {'profile': profile_path, 'n_eigs': n_eigs, 'problem': problem, 'out': out, 'rng_seed': ctx.obj['seed']}

    def action(run_config: RunConfig) -> int:
        params = run_config.parameters
        repository = FileRepository()
        profile = repository.load_profile(params.profile)
        report = SpectralAnalyzer().analyze(profile, params.problem)
        repository.save_spectrum_report(report, _output(run_config, 'spectrum.json'))

        click.echo(f"\n=== Spectrum of {profile.profile_id} ({params.problem.value}) ===")
        click.echo(f"n(L+) = {report.n_neg_plus}, dim Ker L+ = {report.kernel_dim_plus}, "
                   f"n(L-) = {report.n_neg_minus}, dim Ker L- = {report.kernel_dim_minus}")
        click.echo(f"VK index: {report.vk_index}")
        click.echo(f"Coercivity gap: {report.coercivity_kappa:.6g}")
        click.echo(f"Max Re of the dynamical spectrum: {report.max_real_part:.3e} (tolerance {report.real_part_tol:.1e})")
        shown = report.eigenvalues_Lplus if params.n_eigs == 'all' else report.eigenvalues_Lplus[: int(params.n_eigs)]
        click.echo("L+ eigenvalues: " + ", ".join(f"{mu:.10g}" for mu in shown))
        color = {Verdict.SPECTRALLY_STABLE: "green", Verdict.UNSTABLE: "red"}.get(report.verdict, "yellow")
        click.echo("Verdict: ", nl=False)
        click.secho(report.verdict.value, fg=color)
        for note in report.notes:
            click.echo(f"  • {note}")
        return EXIT_OK

    _run(Subcommand.SPECTRUM, flags, config_file, action)


@cli.command()
@click.option('--alpha', type=float, help='Dispersion order in (1/2, 2]')
@click.option('--a', 'a_param', type=float, help='Integration constant a')
@click.option('--lambda-min', type=float, help='First lambda')
@click.option('--lambda-max', type=float, help='Last lambda')
@click.option('--count', type=int, help='Number of lambda values')
@click.option('--half-period', type=float, help='Half period T')
@click.option('--n', 'n_points', type=int, help='Grid size (power of two)')
@click.option('--cold', is_flag=True, default=None, help='Solve every lambda from scratch')
@click.option('--cross-validate', is_flag=True, default=None, help='Compare warm and cold sweeps')
@click.option('--out', default=None, help='Curve CSV path')
@click.option('--config', 'config_file', default=None, help='JSON config file; flags override it')
@click.pass_context
def sweep(ctx, alpha, a_param, lambda_min, lambda_max, count, half_period, n_points, cold, cross_validate, out, config_file):
    """Sweep lambda and tabulate m(lambda), omega(lambda) and the L+ indices."""
    flags = {'alpha': alpha, 'a': a_param, 'lambda_min': lambda_min, 'lambda_max': lambda_max, 'count': count,
             'half_period': half_period, 'n': n_points, 'warm_start': False if cold else None,
             'cross_validate': True if cross_validate else None, 'out': out, 'rng_seed': ctx.obj['seed']}

    def action(run_config: RunConfig) -> int:
        params = run_config.parameters
        config = SweepConfig(
            lambda_min=params.lambda_min, lambda_max=params.lambda_max, count=params.count, a_param=params.a,
            alpha=params.alpha, half_period=params.half_period, n_points=params.n, warm_start=params.warm_start,
            cross_validate=params.cross_validate, solver=SolverOptions(rng_seed=run_config.rng_seed),
        )

        service = CurveService(jobs=ctx.obj['jobs'])
        samples, cross = service.sweep_with_validation(config)
        checks = service.run_checks(samples, config)
        if cross is not None:
            checks.append(cross)

        repository = FileRepository()
        target = Path(_output(run_config, 'curve.csv'))
        repository.save_curve(samples, target)
        repository.save_checks(checks, target.with_name(target.stem + '_checks.json'))

        click.echo(f"\n{'lambda':>10} {'m':>16} {'omega':>16} {'n(L+)':>6} {'VK':>12}")
        for s in samples:
            if not s.converged:
                click.secho(f"{s.lambda_:10.4f}  failed: {s.error}", fg="red")
                continue
            vk = f"{s.vk_index:12.5g}" if s.vk_index is not None else f"{'-':>12}"
            click.echo(f"{s.lambda_:10.4f} {s.energy_m:16.10g} {s.omega:16.10g} {s.n_neg_plus:6d} {vk}")
        _display_checks(checks)

        if all(not s.converged for s in samples):
            return EXIT_NUMERICAL
        return EXIT_OK if all(check.passed for check in checks) else EXIT_CRITERION

    _run(Subcommand.SWEEP, flags, config_file, action)


def _perturbation(service: EvolutionService, profile: WaveProfile, equation: Equation, kind, delta: float, seed: int):
    if delta == 0.0:
        zeros = np.zeros(profile.grid.n_points)
        return RealField.from_values(profile.grid, zeros) if equation == Equation.FKDV else ComplexField.from_values(profile.grid, zeros)
    return service.perturbation_library(profile, kind, seed, equation).scaled(delta)


def _evolution_config(profile: WaveProfile, equation: Equation, dt: Optional[float], t_final: float, record_every: int,
                      dealias: bool = True) -> EvolutionConfig:
    if dt is None:
        dt = default_time_step(profile.phi, equation)
    return EvolutionConfig(equation=equation, alpha=profile.alpha, dt=dt, t_final=t_final, grid=profile.grid,
                           dealias=dealias, record_every=record_every)


@cli.command()
@click.option('--profile', 'profile_path', default=None, help='Profile JSON written by solve')
@click.option('--equation', type=click.Choice(['kdv', 'nls']), default=None, help='Equation to integrate')
@click.option('--delta', type=float, help='Perturbation size in H^{alpha/2}')
@click.option('--t-final', type=float, help='Final time')
@click.option('--dt', type=float, help='Time step')
@click.option('--record-every', type=int, help='Steps between records')
@click.option('--perturbation', type=click.Choice(['random', 'directed']), default=None, help='Perturbation family')
@click.option('--out', default=None, help='Run CSV path')
@click.option('--config', 'config_file', default=None, help='JSON config file; flags override it')
@click.pass_context
def evolve(ctx, profile_path, equation, delta, t_final, dt, record_every, perturbation, out, config_file):
    """Evolve a perturbed wave and record conserved quantities and orbital distance."""
    flags = {'profile': profile_path, 'equation': equation, 'delta': delta, 't_final': t_final, 'dt': dt,
             'record_every': record_every, 'perturbation': perturbation, 'out': out, 'rng_seed': ctx.obj['seed']}

    def action(run_config: RunConfig) -> int:
        params = run_config.parameters
        repository = FileRepository()
        profile = repository.load_profile(params.profile)
        service = EvolutionService()
        config = _evolution_config(profile, params.equation, params.dt, params.t_final, params.record_every, params.dealias)
        direction = _perturbation(service, profile, params.equation, params.perturbation, params.delta, run_config.rng_seed)
        target = _output(run_config, 'run.csv')

        click.echo(f"Evolving {params.equation.value} to t={params.t_final} with dt={config.dt:.3g}, delta={params.delta}...")
        try:
            report = service.run_experiment(profile, direction, config, delta=params.delta)
        except BlowUpError as e:
            if e.partial_report is not None:
                repository.save_run(e.partial_report, target)
            raise
        repository.save_run(report, target)

        drift = report.drift.max_drift()
        click.echo(f"Max orbital distance: {report.max_distance:.3e} (ratio {report.verdict_ratio:.3g})")
        click.echo(f"Max relative drift: P {drift['P']:.2e}, H {drift['H']:.2e}, M {drift['M']:.2e}")
        return EXIT_OK

    _run(Subcommand.EVOLVE, flags, config_file, action)


@cli.command()
@click.option('--profile', 'profile_path', default=None, help='Profile JSON written by solve')
@click.option('--batch', 'batch_path', default=None, help='Batch JSON: equation, deltas, seeds, t_final, dt, record_every, perturbation')
@click.option('--out', default=None, help='Report JSON path')
@click.option('--config', 'config_file', default=None, help='JSON config file; flags override it')
@click.pass_context
def stability(ctx, profile_path, batch_path, out, config_file):
    """Run a batch of perturbed evolutions and report the distance ratios."""
    flags = {'profile': profile_path, 'batch': batch_path, 'out': out, 'rng_seed': ctx.obj['seed']}

    def action(run_config: RunConfig) -> int:
        params = run_config.parameters
        batch = params.batch
        repository = FileRepository()
        profile = repository.load_profile(params.profile)
        service = EvolutionService()
        config = _evolution_config(profile, batch.equation, batch.dt, batch.t_final, batch.record_every)
        cases = [(delta, seed) for delta in batch.deltas for seed in range(batch.seeds)]

        def run(case) -> Dict[str, Any]:
            delta, seed = case
            label = f"delta={delta:g}/seed={seed}"
            direction = _perturbation(service, profile, batch.equation, batch.perturbation, delta, run_config.rng_seed + seed)
            try:
                report = service.run_experiment(profile, direction, config, delta=delta, label=label)
            except BlowUpError as e:
                report = e.partial_report
            return {
                'label': label,
                'delta': delta,
                'seed': run_config.rng_seed + seed,
                'verdict_ratio': report.verdict_ratio if report is not None else None,
                'max_distance': report.max_distance if report is not None else None,
                'max_drift': report.drift.max_drift() if report is not None else None,
                'blow_up': report is None or report.blow_up,
            }

        runs = run_jobs(run, cases, ctx.obj['jobs'])
        repository.save_json({
            'profile': profile.profile_id,
            'equation': batch.equation.value,
            'dt': config.dt,
            't_final': batch.t_final,
            'perturbation': batch.perturbation.value,
            'runs': runs,
        }, _output(run_config, 'stability.json'))

        click.echo(f"\n{'run':<24} {'ratio':>12} {'distance':>12}")
        for r in runs:
            if r['blow_up']:
                click.secho(f"{r['label']:<24} blow-up", fg="red")
            else:
                click.echo(f"{r['label']:<24} {r['verdict_ratio']:12.4g} {r['max_distance']:12.4e}")
        return EXIT_NUMERICAL if all(r['blow_up'] for r in runs) else EXIT_OK

    _run(Subcommand.STABILITY, flags, config_file, action)


@cli.command()
@click.option('--suite', type=click.Choice(['fast', 'full']), default=None, help='Suite to run')
@click.option('--out', default=None, help='Report JSON path')
@click.option('--config', 'config_file', default=None, help='JSON config file; flags override it')
@click.pass_context
def verify(ctx, suite, out, config_file):
    """Run the acceptance criteria and write a machine-readable report."""
    flags = {'suite': suite, 'out': out, 'rng_seed': ctx.obj['seed']}

    def action(run_config: RunConfig) -> int:
        params = run_config.parameters
        click.echo(f"Running the {params.suite.value} verification suite...")
        report = VerificationService(jobs=ctx.obj['jobs'], rng_seed=run_config.rng_seed).run(params.suite)
        FileRepository().save_json(report.model_dump(), _output(run_config, 'verify.json'))

        for criterion in report.criteria:
            color = {"pass": "green", "fail": "red", "error": "yellow"}[criterion.status.value]
            click.echo(f"  {criterion.id:>4} ", nl=False)
            click.secho(f"[{criterion.status.value.upper():5}]", fg=color, nl=False)
            click.echo(f" {criterion.description} (measured {criterion.measured}, bound {criterion.bound})")
        if report.passed:
            return EXIT_OK
        if any(c.status == CriterionStatus.FAIL for c in report.criteria):
            return EXIT_CRITERION
        return EXIT_NUMERICAL

    _run(Subcommand.VERIFY, flags, config_file, action)


def _display_profile(profile: WaveProfile):
    """Display a converged profile."""
    click.echo(f"\n=== Profile {profile.profile_id} ===")
    click.echo(f"omega (energy): {profile.omega_energy}")
    click.echo(f"omega (mass):   {profile.omega_mass}")
    click.echo(f"Energy m:       {profile.energy}")
    click.echo(f"Residual:       {profile.residual_l2:.3e}")
    click.echo(f"Positive:       {profile.positive}")


def _display_checks(checks):
    """Display curve checks."""
    click.echo("\nChecks:")
    for check in checks:
        click.echo(f"  {check.name:20} ", nl=False)
        click.secho("ok" if check.passed else f"FAILED (worst {check.worst_value:.3e})", fg="green" if check.passed else "red")


if __name__ == '__main__':
    cli()
