# cli.py

"""
spectral-contour command line.

    spectral-contour <command> --scene PATH [--nodes N] [--seed S] [--out DIR] [--csv] [--jobs J]

Exit code 0 iff every asserted check in the report passed; 2 for unusable
scene files.
"""

import logging
from pathlib import Path
from typing import Optional

import coloredlogs
import typer
from rich.console import Console
from rich.table import Table

from .commands import run_command
from .errors import ParseError, ValidationError
from .report import Report
from .scene import Scene, parse_scene
from .settings import env_defaults, resolve_settings

logger = logging.getLogger(__name__)

# Quiet third-party loggers
logging.getLogger('joblib').setLevel(logging.WARNING)

app = typer.Typer(
    name='spectral-contour',
    help='Boundary-integral numerics and matrix functional calculus on planar contours.',
    add_completion=False,
    no_args_is_help=True,
)
console = Console()

EXIT_SCENE_ERROR = 2

SceneOption = typer.Option(None, '--scene', '-s', help='Scene file (YAML).', exists=False, dir_okay=False)
NodesOption = typer.Option(None, '--nodes', '-n', min=32, help='Quadrature nodes N (default 256).')
SeedOption = typer.Option(None, '--seed', help='Master seed for stochastic commands.')
OutOption = typer.Option(Path('.'), '--out', '-o', file_okay=False, help='Output directory for the report and CSVs.')
CsvOption = typer.Option(False, '--csv', help='Also write CSV artifacts.')
JobsOption = typer.Option(None, '--jobs', '-j', help='Worker processes for ensembles and restarts.')
LogLevelOption = typer.Option(None, '--log-level', help='DEBUG, INFO, WARNING or ERROR.')


def _install_logging(level: Optional[str]) -> None:
    level = (level or str(env_defaults()['log_level'])).upper()
    coloredlogs.install(level=level, fmt='%(asctime)s %(name)s %(levelname)s %(message)s')


def _print_report(report: Report) -> None:
    table = Table(title=f'{report.command} ({report.scene_digest[:12] if report.scene_digest else "-"})')
    table.add_column('check')
    table.add_column('value', justify='right')
    table.add_column('tolerance', justify='right')
    table.add_column('result')
    for check in report.checks:
        if check.error:
            result = f'[red]{check.error}[/red]'
        elif check.kind == 'report':
            result = '[dim]report[/dim]'
        else:
            result = '[green]pass[/green]' if check.passed else '[red]FAIL[/red]'
        value = check.value
        if isinstance(value, float):
            value = f'{value:.9g}'
        table.add_row(check.name, str(value) if value is not None else '',
                      '' if check.tolerance is None else f'{check.tolerance:.1e}', result)
    console.print(table)
    verdict = '[green]PASSED[/green]' if report.passed else '[red]FAILED[/red]'
    console.print(f'{report.command}: {verdict} in {report.timing.get("seconds", 0.0):.2f}s')


def _run(command: str, scene_path: Optional[Path], nodes, seed, out: Path, csv: bool, jobs, log_level) -> None:
    _install_logging(log_level)
    scene: Optional[Scene] = None
    try:
        if scene_path is not None:
            scene = parse_scene(scene_path)
        elif command != 'selftest':
            raise ValidationError(f"'{command}' needs --scene", problems=['--scene: required'])
        settings = resolve_settings(
            cli={'nodes': nodes, 'seed': seed, 'n_jobs': jobs, 'log_level': log_level,
                 'out_dir': out, 'write_csv': csv},
            scene=scene.settings_layer() if scene is not None else None,
            tolerance_overrides=scene.tolerances if scene is not None else None,
        )
        report = run_command(command, scene, settings, cli_seed=seed)
    except ParseError as exc:
        console.print(f'[red]Scene parse error[/red]: {exc}')
        raise typer.Exit(code=EXIT_SCENE_ERROR)
    except ValidationError as exc:
        console.print(f'[red]Invalid scene[/red]: {exc}')
        for problem in exc.problems:
            console.print(f'  - {problem}')
        raise typer.Exit(code=EXIT_SCENE_ERROR)

    _print_report(report)
    raise typer.Exit(code=0 if report.passed else 1)


@app.command()
def convexity(scene: Optional[Path] = SceneOption, nodes: Optional[int] = NodesOption,
              seed: Optional[int] = SeedOption, out: Path = OutOption, csv: bool = CsvOption,
              jobs: Optional[int] = JobsOption, log_level: Optional[str] = LogLevelOption):
    """Neumann-Poincare matrix, convexity classifiers and partition of unity."""
    _run('convexity', scene, nodes, seed, out, csv, jobs, log_level)


@app.command()
def transforms(scene: Optional[Path] = SceneOption, nodes: Optional[int] = NodesOption,
               seed: Optional[int] = SeedOption, out: Path = OutOption, csv: bool = CsvOption,
               jobs: Optional[int] = JobsOption, log_level: Optional[str] = LogLevelOption):
    """Cauchy transforms and Plemelj residuals."""
    _run('transforms', scene, nodes, seed, out, csv, jobs, log_level)


@app.command()
def calculus(scene: Optional[Path] = SceneOption, nodes: Optional[int] = NodesOption,
             seed: Optional[int] = SeedOption, out: Path = OutOption, csv: bool = CsvOption,
             jobs: Optional[int] = JobsOption, log_level: Optional[str] = LogLevelOption):
    """Numerical-range inclusion, total mass and decomposition of the scene matrix."""
    _run('calculus', scene, nodes, seed, out, csv, jobs, log_level)


@app.command()
def mapping(scene: Optional[Path] = SceneOption, nodes: Optional[int] = NodesOption,
            seed: Optional[int] = SeedOption, out: Path = OutOption, csv: bool = CsvOption,
            jobs: Optional[int] = JobsOption, log_level: Optional[str] = LogLevelOption):
    """Mapping-theorem ensemble and norm inequalities."""
    _run('mapping', scene, nodes, seed, out, csv, jobs, log_level)


@app.command()
def extremal(scene: Optional[Path] = SceneOption, nodes: Optional[int] = NodesOption,
             seed: Optional[int] = SeedOption, out: Path = OutOption, csv: bool = CsvOption,
             jobs: Optional[int] = JobsOption, log_level: Optional[str] = LogLevelOption):
    """Extremal-pair search and the bounds derived from it."""
    _run('extremal', scene, nodes, seed, out, csv, jobs, log_level)


@app.command()
def smooth(scene: Optional[Path] = SceneOption, nodes: Optional[int] = NodesOption,
           seed: Optional[int] = SeedOption, out: Path = OutOption, csv: bool = CsvOption,
           jobs: Optional[int] = JobsOption, log_level: Optional[str] = LogLevelOption):
    """Smoothed neighbourhoods of a point set and spectral stability."""
    _run('smooth', scene, nodes, seed, out, csv, jobs, log_level)


@app.command()
def selftest(nodes: Optional[int] = NodesOption, seed: Optional[int] = SeedOption,
             out: Path = OutOption, csv: bool = CsvOption,
             jobs: Optional[int] = JobsOption, log_level: Optional[str] = LogLevelOption):
    """Run the built-in acceptance scenes."""
    _run('selftest', None, nodes, seed, out, csv, jobs, log_level)


def main() -> None:
    app()


if __name__ == '__main__':
    main()
