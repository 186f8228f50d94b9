"""Time-to-solution experiments and resource-scaling sweeps."""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field
from scipy.stats import binomtest

from qtransport.anneal import AnnealSolver, BruteForceSolver, collect_runs
from qtransport.config import Config
from qtransport.encoders import (
    TrafficGrid,
    encode_traffic_grid,
    encode_tsp_binary,
    encode_tsp_one_hot,
    random_tsp,
    resource_report,
)
from qtransport.exceptions import ParameterError, UndefinedResultError
from qtransport.qaoa import QaoaSolver
from qtransport.qubo import AnyCost, brute_force_min
from qtransport.utils import write_csv, write_json
from qtransport.validators import ExperimentSpec, SolverConfig

logger = logging.getLogger('main_logger')

TARGET_PROBABILITY = 0.99
SWEEP_ENCODINGS = ('one-hot', 'one-hot-fixed', 'binary', 'traffic')
SWEEP_COLUMNS = ('size', 'encoding', 'num_vars', 'nnz', 'max_degree', 'density')


def compute_tts(run_time: float, success_probability: float) -> float:
    """T * ln(1 - 0.99) / ln(1 - p); one run suffices when p = 1."""
    if not (run_time > 0 and math.isfinite(run_time)):
        raise ParameterError(f"run time must be positive, got {run_time}")
    if not 0.0 <= success_probability <= 1.0:
        raise ParameterError(f"success probability must lie in [0, 1], got {success_probability}")
    if success_probability == 0.0:
        raise UndefinedResultError("time-to-solution is undefined when no run succeeds (p = 0)")
    if success_probability == 1.0:
        return run_time
    return run_time * math.log(1.0 - TARGET_PROBABILITY) / math.log(1.0 - success_probability)


def wilson_interval(successes: int, runs: int, confidence: float = 0.95) -> tuple[float, float]:
    if runs < 1:
        raise ParameterError(f"runs must be >= 1, got {runs}")
    ci = binomtest(successes, runs).proportion_ci(confidence_level=confidence, method='wilson')
    return float(ci.low), float(ci.high)


class TtsReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    run_time: float = Field(..., alias="T", description="Mean solver wall time per run, seconds")
    success_probability: float = Field(..., alias="p", ge=0.0, le=1.0)
    runs: int = Field(..., ge=1)
    successes: int = Field(..., ge=0)
    tts: Optional[float] = None
    ci95: tuple[float, float]
    seed: int
    optimal_energy: float
    energies: list[float]
    solver: dict
    instance: dict = Field(default_factory=dict)

    @computed_field
    @property
    def undefined(self) -> bool:
        return self.tts is None

    def to_document(self) -> dict:
        return self.model_dump(by_alias=True)


def build_solver(config: SolverConfig):
    if config.name == 'brute':
        return BruteForceSolver()
    if config.name == 'sa':
        return AnnealSolver(config.sweeps, config.t0, config.t1)
    return QaoaSolver(config.p, config.restarts, config.max_iters, config.method, config.shots, config.exact)


def run_tts_experiment(spec: ExperimentSpec, costfn: AnyCost | None = None) -> TtsReport:
    """Oracle optimum, ``spec.runs`` seeded solver runs, then p, T and TTS.

    A run counts as a success when its best energy is within the success
    tolerance of the optimum: ``spec.optimal_energy`` when given, otherwise
    the brute-force minimum. With no successes the report carries
    ``tts=None`` instead of raising.
    """
    costfn = spec.model.to_model() if costfn is None else costfn
    if spec.optimal_energy is not None:
        optimum = spec.optimal_energy
    else:
        _, optimum = brute_force_min(costfn)
    solver = build_solver(spec.solver)

    results = collect_runs(costfn, solver, spec.runs, spec.seed, spec.solver.workers)
    energies = [r.best_energy for r in results]
    successes = sum(e <= optimum + Config.SUCCESS_TOL for e in energies)
    p = successes / spec.runs
    run_time = float(np.mean([r.wall_time for r in results]))

    try:
        tts = compute_tts(run_time, p)
    except UndefinedResultError as e:
        logger.warning(f"{e}; reporting tts=null")
        tts = None

    report = TtsReport(
        T=run_time,
        p=p,
        runs=spec.runs,
        successes=successes,
        tts=tts,
        ci95=wilson_interval(successes, spec.runs),
        seed=spec.seed,
        optimal_energy=optimum,
        energies=energies,
        solver=solver.describe(costfn),
        instance={'num_vars': costfn.num_vars, **spec.instance},
    )
    logger.info(f"TTS experiment: {solver.name}, p={successes}/{spec.runs}, T={run_time:.6g}s, tts={tts}")
    if spec.output:
        write_json(spec.output, report.to_document())
    return report


def sweep_model(encoding: str, size: int, seed: int = 0):
    """Model for one row of a scaling sweep; traffic sizes are grid sides."""
    if encoding in ('one-hot', 'one-hot-fixed'):
        return encode_tsp_one_hot(random_tsp(size, seed), fixed_start=encoding == 'one-hot-fixed')[0]
    if encoding == 'binary':
        return encode_tsp_binary(random_tsp(size, seed))[0]
    if encoding == 'traffic':
        rng = np.random.default_rng(seed)
        cells = size * size
        grid = TrafficGrid(size, size, tuple(rng.integers(0, 10, cells)), tuple(rng.integers(0, 10, cells)),
                           switch_weight=1.0, green_wave_weight=1.0)
        return encode_traffic_grid(grid)
    raise ParameterError(f"unknown encoding {encoding!r}; choose from {', '.join(SWEEP_ENCODINGS)}")


def scaling_sweep(encodings: Sequence[str], sizes: Sequence[int], output=None, seed: int = 0) -> list[dict]:
    if not encodings:
        raise ParameterError("no encodings selected")
    if not sizes:
        raise ParameterError("no sizes given")
    bad = [s for s in sizes if s < 1]
    if bad:
        raise ParameterError(f"sizes must be positive, got {bad}")

    rows = []
    for size in sizes:
        for encoding in encodings:
            report = resource_report(sweep_model(encoding, size, seed))
            rows.append({'size': size, 'encoding': encoding, **report.to_dict()})
            logger.info(f"Scaling sweep {encoding} size {size}: {report.num_variables} variables")
    if output is not None:
        write_csv(output, SWEEP_COLUMNS, [[row[c] for c in SWEEP_COLUMNS] for row in rows])
    return rows
