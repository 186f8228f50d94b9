"""Command-line front end: encode -> solve -> benchmark.

Exit codes: 0 success, 2 input error, 3 resource cap, 4 undefined result.
"""

import functools
import json
import logging
import math
import os

import click

from qtransport.bench import SWEEP_COLUMNS, SWEEP_ENCODINGS, run_tts_experiment, scaling_sweep
from qtransport.config import Config
from qtransport.exceptions import ParameterError, QTransportError, UndefinedResultError
from qtransport.logger import configure_logging
from qtransport.pipeline import ENCODINGS, encode_problem, solve_model, tour_optimum
from qtransport.qaoa import ANSATZES, QaoaParams, landscape_slice
from qtransport.utils import parse_document, read_json, sidecar_path, write_csv, write_json
from qtransport.validators import ExperimentSpec, QuboDocument, SolverConfig

logger = logging.getLogger('main_logger')
error_logger = logging.getLogger('error_logger')

POSITIVE = click.FloatRange(min=0.0, min_open=True)


def handle_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except QTransportError as e:
            error_logger.error(str(e))
            raise click.exceptions.Exit(e.exit_code)
    return wrapper


def seed_option(f):
    return click.option('--seed', type=int, default=lambda: Config.DEFAULT_SEED, show_default='0',
                        help='Master seed; every seeded output is reproducible.')(f)


def out_option(f):
    return click.option('--out', '-o', 'out', default='-', show_default=True,
                        help="Output path, '-' for stdout.")(f)


def format_option(f):
    return click.option('--format', 'fmt', type=click.Choice(['json', 'csv']), default='csv', show_default=True)(f)


def solver_options(f):
    options = [
        click.option('--solver', type=click.Choice(['brute', 'sa', 'qaoa']), default='sa', show_default=True),
        click.option('--sweeps', type=click.IntRange(min=1), help='Annealing sweeps.'),
        click.option('--t0', type=POSITIVE, help='Initial annealing temperature.'),
        click.option('--t1', type=POSITIVE, help='Final annealing temperature.'),
        click.option('--p', 'depth', type=click.IntRange(min=1), default=1, show_default=True, help='QAOA depth.'),
        click.option('--restarts', type=click.IntRange(min=1)),
        click.option('--max-iters', type=click.IntRange(min=1)),
        click.option('--method', type=click.Choice(['Nelder-Mead', 'COBYLA']), default='Nelder-Mead', show_default=True),
        click.option('--shots', type=click.IntRange(min=1)),
        click.option('--exact/--sampled', default=True, show_default=True,
                     help='Drive the QAOA optimiser with the exact or a sampled expectation.'),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _solver_config(solver, sweeps, t0, t1, depth, restarts, max_iters, method, shots, exact, workers=1):
    options = {
        'name': solver, 'sweeps': sweeps, 't0': t0, 't1': t1, 'p': depth, 'restarts': restarts,
        'max_iters': max_iters, 'method': method, 'shots': shots, 'exact': exact, 'workers': workers,
    }
    return parse_document(SolverConfig, options, "solver options")


def _load_model(path):
    return parse_document(QuboDocument, read_json(path), f"model document {path}")


def _is_file(out):
    return out not in (None, '-')


@click.group()
@click.option('--log-dir', default=None, help='Directory for info.log and errors.log.')
def cli(log_dir):
    """Transport optimisation as QUBO / Ising / HOBO models."""
    configure_logging(log_dir)


@cli.command()
@click.argument('problem', type=click.Path(dir_okay=False))
@click.option('--encoding', type=click.Choice(ENCODINGS), default='one-hot', show_default=True)
@click.option('--lambda', 'lam', type=POSITIVE, help='Penalty weight (default: dominance bound).')
@out_option
@handle_errors
def encode(problem, encoding, lam, out):
    """Encode a problem document into a model document plus layout sidecar."""
    encoded = encode_problem(read_json(problem), encoding, lam)
    write_json(out, encoded.model.to_document())
    summary = json.dumps(encoded.resources.to_dict(), sort_keys=True)
    if _is_file(out):
        write_json(sidecar_path(out, 'layout.json'), encoded.layout)
        click.echo(summary)
    else:
        click.echo(summary, err=True)


@cli.command()
@click.argument('model', type=click.Path(dir_okay=False))
@solver_options
@click.option('--layout', type=click.Path(dir_okay=False), help='Layout sidecar (default: <model>.layout.json).')
@click.option('--trace', type=click.Path(dir_okay=False), help='QAOA expectation trace CSV.')
@seed_option
@out_option
@handle_errors
def solve(model, solver, sweeps, t0, t1, depth, restarts, max_iters, method, shots, exact, layout, trace, seed, out):
    """Minimise a model document with brute force, annealing or QAOA."""
    config = _solver_config(solver, sweeps, t0, t1, depth, restarts, max_iters, method, shots, exact)
    doc = _load_model(model)
    if layout is None and os.path.exists(sidecar_path(model, 'layout.json')):
        layout = sidecar_path(model, 'layout.json')
    layout_doc = read_json(layout) if layout is not None else None

    solution = solve_model(doc, config, seed, layout_doc)
    write_json(out, solution)
    if 'trace' in solution:
        if trace is None and _is_file(out):
            trace = sidecar_path(out, 'trace.csv')
        if trace is not None:
            write_csv(trace, ('iter', 'best_expectation'), list(enumerate(solution['trace'])))


@cli.command()
@click.argument('model', type=click.Path(dir_okay=False))
@solver_options
@click.option('--runs', type=click.IntRange(min=1), default=100, show_default=True)
@click.option('--workers', type=click.IntRange(min=1), default=1, show_default=True)
@click.option('--layout', type=click.Path(dir_okay=False),
              help='TSP layout sidecar whose tour oracle gives the optimum (default: <model>.layout.json).')
@click.option('--optimum', type=float, help='Known optimal energy; skips the brute-force oracle.')
@seed_option
@out_option
@handle_errors
def tts(model, solver, sweeps, t0, t1, depth, restarts, max_iters, method, shots, exact, runs, workers,
        layout, optimum, seed, out):
    """Estimate success probability and time-to-solution over seeded runs."""
    config = _solver_config(solver, sweeps, t0, t1, depth, restarts, max_iters, method, shots, exact, workers)
    if layout is None and os.path.exists(sidecar_path(model, 'layout.json')):
        layout = sidecar_path(model, 'layout.json')
    if optimum is None and layout is not None:
        optimum = tour_optimum(read_json(layout))
    spec = parse_document(ExperimentSpec, {
        'model': read_json(model),
        'solver': config.model_dump(),
        'runs': runs,
        'seed': seed,
        'instance': {'path': os.path.basename(model)},
        'optimal_energy': optimum,
    }, "experiment spec")
    report = run_tts_experiment(spec)
    write_json(out, report.to_document())
    if report.undefined:
        raise UndefinedResultError(f"no run out of {runs} reached the optimum {report.optimal_energy}")


def _parse_floats(ctx, param, value):
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")


@cli.command()
@click.argument('model', type=click.Path(dir_okay=False))
@click.option('--ansatz', type=click.Choice(ANSATZES), default='qaoa', show_default=True)
@click.option('--p', 'depth', type=click.IntRange(min=1), default=1, show_default=True,
              help='QAOA depth, or CNOT ladders of the VQE ansatz.')
@click.option('--grid', type=click.IntRange(min=2), default=25, show_default=True, help='Points per axis.')
@click.option('--extent', type=POSITIVE, default=math.pi, show_default='pi', help='Half-width of the slice.')
@click.option('--center', callback=_parse_floats,
              help='Comma-separated angles: 2p gammas then betas for QAOA, (p+1)*n for VQE.')
@click.option('--axis-aligned', is_flag=True,
              help='Slice along the first two parameters (gamma_1, beta_1 for QAOA) instead of random directions.')
@seed_option
@format_option
@out_option
@handle_errors
def landscape(model, ansatz, depth, grid, extent, center, axis_aligned, seed, fmt, out):
    """Expectation values on a 2-D slice of the QAOA or VQE parameter space."""
    costfn = _load_model(model).to_model()
    if center is not None and ansatz == 'qaoa':
        if len(center) != 2 * depth:
            raise ParameterError(f"--center needs {2 * depth} angles, got {len(center)}")
        center = QaoaParams.from_vector(center)
    result = landscape_slice(costfn, depth, center, grid, extent, seed, axis_aligned, ansatz=ansatz)
    meta = {**result.metadata(), 'p': depth, 'grid': grid, 'extent': extent, 'axis_aligned': axis_aligned}

    if fmt == 'json':
        write_json(out, {**meta, 'values': result.values.tolist()})
        return
    write_csv(out, [f'c{c}' for c in range(grid)], result.values.tolist())
    if _is_file(out):
        write_json(sidecar_path(out, 'meta.json'), meta)


def _parse_sizes(ctx, param, value):
    try:
        sizes = [int(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")
    if not sizes:
        raise click.BadParameter("at least one size is required")
    return sizes


@cli.command()
@click.option('--encoding', 'encodings', type=click.Choice(SWEEP_ENCODINGS), multiple=True,
              default=('one-hot', 'binary'), show_default=True)
@click.option('--sizes', callback=_parse_sizes, default='4,8,16', show_default=True)
@seed_option
@format_option
@out_option
@handle_errors
def resources(encodings, sizes, seed, fmt, out):
    """Variable and coupling counts per encoding and instance size."""
    rows = scaling_sweep(list(encodings), sizes, seed=seed)
    if fmt == 'json':
        write_json(out, rows)
    else:
        write_csv(out, SWEEP_COLUMNS, [[row[c] for c in SWEEP_COLUMNS] for row in rows])
