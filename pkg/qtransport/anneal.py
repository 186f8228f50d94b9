"""Seeded single-flip simulated annealing and success-probability estimation."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from qtransport.config import Config
from qtransport.exceptions import ParameterError
from qtransport.qubo import AnyCost, BinaryCost, PseudoBooleanPolynomial, QuboModel, as_binary_cost, brute_force_min

logger = logging.getLogger('main_logger')


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling from temp_initial to temp_final over ``sweeps`` sweeps."""

    sweeps: int
    temp_initial: float
    temp_final: float

    def __post_init__(self) -> None:
        if self.sweeps < 1:
            raise ParameterError(f"sweeps must be >= 1, got {self.sweeps}")
        if not (self.temp_final > 0):
            raise ParameterError(f"temp_final must be positive, got {self.temp_final}")
        if self.temp_initial < self.temp_final:
            raise ParameterError(f"temp_initial {self.temp_initial} is below temp_final {self.temp_final}")

    @property
    def decay(self) -> float:
        if self.sweeps == 1:
            return 1.0
        return (self.temp_final / self.temp_initial) ** (1.0 / (self.sweeps - 1))

    def temperature(self, sweep: int) -> float:
        return self.temp_initial * self.decay ** sweep

    @classmethod
    def default_for(cls, costfn: AnyCost, sweeps: int | None = None,
                    temp_initial: float | None = None, temp_final: float | None = None) -> "AnnealSchedule":
        """Endpoints default to (max|coefficient|, 1e-3 * max|coefficient|)."""
        scale = as_binary_cost(costfn).max_abs_coefficient() or 1.0
        return cls(
            sweeps=sweeps if sweeps is not None else Config.ANNEAL_SWEEPS,
            temp_initial=temp_initial if temp_initial is not None else scale,
            temp_final=temp_final if temp_final is not None else 1e-3 * scale,
        )

    def to_dict(self) -> dict:
        return {'sweeps': self.sweeps, 't0': self.temp_initial, 't1': self.temp_final}


@dataclass(frozen=True)
class AnnealResult:
    best_assignment: tuple[int, ...]
    best_energy: float
    energy_trajectory: tuple[float, ...]
    seed: int
    wall_time: float

    @property
    def spins(self) -> tuple[int, ...]:
        return tuple(1 - 2 * b for b in self.best_assignment)


# ----------------------------------------------------------------------
# Incremental energy bookkeeping
# ----------------------------------------------------------------------

class QuadraticFlipState:
    """Keeps local fields f_i = h_i + sum_j W_ij x_j so a flip costs one row update."""

    def __init__(self, model: QuboModel, x):
        self.x = np.array(x, dtype=np.float64)
        self.W = model.symmetric_couplings()
        h = np.zeros(model.num_vars)
        for i, c in model.linear.items():
            h[i] = c
        self.local = h + self.W @ self.x
        self.energy = model.evaluate(self.x)

    def delta(self, i: int) -> float:
        return (1.0 - 2.0 * self.x[i]) * self.local[i]

    def flip(self, i: int, delta: float | None = None) -> None:
        step = 1.0 - 2.0 * self.x[i]
        self.energy += step * self.local[i] if delta is None else delta
        self.x[i] += step
        self.local += step * self.W[i]

    def bits(self) -> tuple[int, ...]:
        return tuple(int(b) for b in self.x)


class PolynomialFlipState:
    """Per-variable term adjacency: each entry holds (coefficient, other indices)."""

    def __init__(self, poly: PseudoBooleanPolynomial, x):
        self.x = [int(b) for b in x]
        self.adjacency = [[] for _ in range(poly.num_vars)]
        for key, c in poly.terms.items():
            for k in key:
                self.adjacency[k].append((c, tuple(m for m in key if m != k)))
        self.energy = poly.evaluate(self.x)

    def delta(self, i: int) -> float:
        x = self.x
        partial = sum(c for c, others in self.adjacency[i] if all(x[m] for m in others))
        return (1 - 2 * x[i]) * partial

    def flip(self, i: int, delta: float | None = None) -> None:
        self.energy += self.delta(i) if delta is None else delta
        self.x[i] = 1 - self.x[i]

    def bits(self) -> tuple[int, ...]:
        return tuple(self.x)


def make_flip_state(costfn: BinaryCost, x):
    if isinstance(costfn, PseudoBooleanPolynomial):
        return PolynomialFlipState(costfn, x)
    return QuadraticFlipState(costfn, x)


# ----------------------------------------------------------------------
# Annealing
# ----------------------------------------------------------------------

def simulated_anneal(costfn: AnyCost, schedule: AnnealSchedule | None = None, seed: int = 0) -> AnnealResult:
    """Metropolis single-bit-flip sweeps in random order with geometric cooling.

    The best state is taken at sweep boundaries, so a single sweep draws one
    state. Ising models are annealed in x-space (s = 1 - 2x);
    ``AnnealResult.spins`` gives the spin image.
    """
    cost = as_binary_cost(costfn)
    n = cost.num_vars
    if n < 1:
        raise ParameterError("simulated annealing needs at least one variable")
    schedule = schedule or AnnealSchedule.default_for(cost)

    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    state = make_flip_state(cost, rng.integers(0, 2, size=n))
    best_energy, best_bits = math.inf, state.bits()
    trajectory = []

    for sweep in range(schedule.sweeps):
        temp = schedule.temperature(sweep)
        order = rng.permutation(n)
        draws = rng.random(n)
        for i, u in zip(order, draws):
            d = state.delta(i)
            if d <= 0.0 or u < math.exp(-d / temp):
                state.flip(i, d)
        if state.energy < best_energy:
            best_energy, best_bits = state.energy, state.bits()
        trajectory.append(best_energy)

    wall_time = time.perf_counter() - start
    return AnnealResult(
        best_assignment=best_bits,
        best_energy=cost.evaluate(best_bits),
        energy_trajectory=tuple(trajectory),
        seed=int(seed),
        wall_time=wall_time,
    )


# ----------------------------------------------------------------------
# Solvers and repeated runs
# ----------------------------------------------------------------------

Solver = Callable[[AnyCost, int], AnnealResult]


@dataclass(frozen=True)
class AnnealSolver:
    sweeps: Optional[int] = None
    temp_initial: Optional[float] = None
    temp_final: Optional[float] = None

    name = 'sa'

    def schedule_for(self, costfn: AnyCost) -> AnnealSchedule:
        return AnnealSchedule.default_for(costfn, self.sweeps, self.temp_initial, self.temp_final)

    def __call__(self, costfn: AnyCost, seed: int) -> AnnealResult:
        return simulated_anneal(costfn, self.schedule_for(costfn), seed)

    def describe(self, costfn: AnyCost) -> dict:
        return {'name': self.name, **self.schedule_for(costfn).to_dict()}


@dataclass(frozen=True)
class BruteForceSolver:
    name = 'brute'

    def __call__(self, costfn: AnyCost, seed: int) -> AnnealResult:
        start = time.perf_counter()
        bits, energy = brute_force_min(costfn)
        return AnnealResult(tuple(bits), energy, (energy,), int(seed), time.perf_counter() - start)

    def describe(self, costfn: AnyCost) -> dict:
        return {'name': self.name}


def derive_seeds(seed: int, runs: int) -> list[int]:
    """Independent per-run seeds spawned from the master seed."""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(runs)]


def collect_runs(costfn: AnyCost, solver: Solver, runs: int, seed: int = 0, workers: int = 1) -> list[AnnealResult]:
    """Run ``solver`` once per derived seed; results come back in seed order."""
    if runs < 1:
        raise ParameterError(f"runs must be >= 1, got {runs}")
    seeds = derive_seeds(seed, runs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(solver, [costfn] * runs, seeds))
    return [solver(costfn, s) for s in seeds]


def estimate_success_probability(costfn: AnyCost, solver: Solver, runs: int, optimal_energy: float,
                                 seed: int = 0, tol: float | None = None, workers: int = 1) -> float:
    """Fraction of runs whose best energy is within ``tol`` of the known optimum."""
    tol = Config.SUCCESS_TOL if tol is None else tol
    results = collect_runs(costfn, solver, runs, seed, workers)
    hits = sum(r.best_energy <= optimal_energy + tol for r in results)
    logger.info(f"Success probability {hits}/{runs} against optimum {optimal_energy}")
    return hits / runs
