"""Statevector simulation of the QAOA ansatz.

Basis index k holds the amplitude of the assignment x with x_i = bit i of k.
Layers apply the diagonal cost phase exp(-i gamma C(x)) followed by the
transverse-field mixer exp(-i beta X) on every qubit. A hardware-efficient
RY + CNOT ansatz shares the same amplitude layout for landscape comparisons.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from qtransport.anneal import AnnealResult
from qtransport.config import Config
from qtransport.exceptions import DimensionError, DomainError, ParameterError, ResourceCapError
from qtransport.qubo import AnyCost, as_binary_cost, energy_table

logger = logging.getLogger('main_logger')

NORM_TOL = 1e-9
METHODS = ('Nelder-Mead', 'COBYLA')
ANSATZES = ('qaoa', 'vqe')


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        size = amps.shape[0] if amps.ndim == 1 else 0
        if size < 2 or size & (size - 1):
            raise DimensionError(f"amplitude vector length must be a power of two >= 2, got {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"state norm {norm} differs from 1")
        object.__setattr__(self, 'amplitudes', amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'gammas', tuple(float(g) for g in self.gammas))
        object.__setattr__(self, 'betas', tuple(float(b) for b in self.betas))
        if len(self.gammas) != len(self.betas):
            raise DimensionError(f"{len(self.gammas)} gammas but {len(self.betas)} betas")
        if not self.gammas:
            raise ParameterError("QAOA depth must be >= 1")

    @property
    def depth(self) -> int:
        return len(self.gammas)

    def as_vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas)

    @classmethod
    def from_vector(cls, vector) -> "QaoaParams":
        vector = np.asarray(vector, dtype=np.float64)
        if vector.ndim != 1 or len(vector) % 2:
            raise DimensionError(f"angle vector must have even length, got {vector.shape}")
        p = len(vector) // 2
        return cls(tuple(vector[:p]), tuple(vector[p:]))

    @classmethod
    def zeros(cls, p: int) -> "QaoaParams":
        return cls((0.0,) * p, (0.0,) * p)

    def padded(self, p: int) -> "QaoaParams":
        """Extend to depth p with zero-angle layers (which act as the identity)."""
        if p < self.depth:
            raise ParameterError(f"cannot pad depth {self.depth} down to {p}")
        extra = (0.0,) * (p - self.depth)
        return QaoaParams(self.gammas + extra, self.betas + extra)

    def to_dict(self) -> dict:
        return {'gammas': list(self.gammas), 'betas': list(self.betas)}


def _diagonal(costfn, n: int) -> np.ndarray:
    if isinstance(costfn, np.ndarray):
        if costfn.shape != (1 << n,):
            raise DimensionError(f"cost diagonal has shape {costfn.shape}, state has 2^{n} amplitudes")
        return costfn
    if costfn.num_vars != n:
        raise DimensionError(f"cost has {costfn.num_vars} variables, state has {n} qubits")
    return energy_table(costfn, cap=n)


def init_uniform(n: int, cap: int | None = None) -> StateVector:
    """Hadamard on every qubit: all 2^n amplitudes equal 2^{-n/2}."""
    cap = Config.STATEVECTOR_CAP if cap is None else cap
    if n < 1:
        raise ParameterError(f"need at least one qubit, got {n}")
    if n > cap:
        raise ResourceCapError(f"statevector of {n} qubits exceeds cap {cap}")
    return StateVector(np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128))


def _phase(amps: np.ndarray, diag: np.ndarray, gamma: float) -> np.ndarray:
    return amps * np.exp(-1j * gamma * diag)


def _mix(amps: np.ndarray, n: int, beta: float) -> np.ndarray:
    amps = amps.copy()
    c, s = math.cos(beta), -1j * math.sin(beta)
    for i in range(n):
        # middle axis is bit i of the basis index
        view = amps.reshape(1 << (n - 1 - i), 2, 1 << i)
        zero = view[:, 0, :].copy()
        one = view[:, 1, :].copy()
        view[:, 0, :] = c * zero + s * one
        view[:, 1, :] = s * zero + c * one
    return amps


def apply_cost_phase(state: StateVector, costfn, gamma: float) -> StateVector:
    diag = _diagonal(costfn, state.num_qubits)
    return StateVector(_phase(state.amplitudes, diag, gamma))


def apply_mixer(state: StateVector, beta: float) -> StateVector:
    return StateVector(_mix(state.amplitudes, state.num_qubits, beta))


def _circuit(n: int, diag: np.ndarray, params: QaoaParams) -> np.ndarray:
    amps = np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)
    for gamma, beta in zip(params.gammas, params.betas):
        amps = _mix(_phase(amps, diag, gamma), n, beta)
    return amps


def run_qaoa_circuit(n: int, costfn, params: QaoaParams, cap: int | None = None) -> StateVector:
    """Uniform superposition, then p alternating cost-phase and mixer layers."""
    init_uniform(n, cap)
    return StateVector(_circuit(n, _diagonal(costfn, n), params))


def expectation(state: StateVector, costfn) -> float:
    return float(state.probabilities() @ _diagonal(costfn, state.num_qubits))


# ----------------------------------------------------------------------
# Sampling
# ----------------------------------------------------------------------

def bitstring(index: int, n: int) -> str:
    """'x0x1...x_{n-1}' for basis index ``index``."""
    return ''.join(str((index >> i) & 1) for i in range(n))


@dataclass(frozen=True)
class SampleCounts:
    num_qubits: int
    counts: dict[str, int]
    shots: int

    def __post_init__(self) -> None:
        if sum(self.counts.values()) != self.shots:
            raise ParameterError(f"counts sum to {sum(self.counts.values())}, expected {self.shots} shots")

    def frequencies(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}

    def mean(self, costfn: AnyCost) -> float:
        cost = as_binary_cost(costfn)
        return sum(cost.evaluate([int(b) for b in k]) * v for k, v in self.counts.items()) / self.shots

    def best(self, costfn: AnyCost) -> tuple[list[int], float]:
        """Lowest-energy sampled bitstring; ties go to the most frequent, then lexicographic."""
        cost = as_binary_cost(costfn)
        scored = [(cost.evaluate([int(b) for b in k]), -v, k) for k, v in self.counts.items()]
        energy, _, key = min(scored)
        return [int(b) for b in key], energy

    def to_dict(self) -> dict:
        return {'shots': self.shots, 'counts': dict(sorted(self.counts.items()))}


def _draw(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    if shots < 1:
        raise ParameterError(f"shots must be >= 1, got {shots}")
    return rng.choice(len(probs), size=shots, p=probs / probs.sum())


def sample(state: StateVector, shots: int, seed: int = 0) -> SampleCounts:
    """Born-rule draws from |amplitude|^2."""
    n = state.num_qubits
    indices, counts = np.unique(_draw(state.probabilities(), shots, np.random.default_rng(seed)), return_counts=True)
    return SampleCounts(n, {bitstring(int(k), n): int(c) for k, c in zip(indices, counts)}, shots)


def estimate_expectation(state: StateVector, costfn, shots: int, seed: int = 0) -> float:
    """Sample mean of the cost over ``shots`` measurements."""
    diag = _diagonal(costfn, state.num_qubits)
    draws = _draw(state.probabilities(), shots, np.random.default_rng(seed))
    return float(diag[draws].mean())


# ----------------------------------------------------------------------
# Angle optimisation
# ----------------------------------------------------------------------

def random_params(p: int, rng: np.random.Generator) -> QaoaParams:
    """gammas uniform in [0, pi), betas uniform in [0, pi/2)."""
    return QaoaParams(tuple(rng.uniform(0.0, math.pi, p)), tuple(rng.uniform(0.0, math.pi / 2, p)))


def _num_qubits(costfn) -> int:
    return as_binary_cost(costfn).num_vars


def optimize_angles(costfn: AnyCost, p: int, restarts: int | None = None, max_iters: int | None = None,
                    seed: int | None = None, method: str = 'Nelder-Mead', shots: int | None = None,
                    initial: QaoaParams | None = None, tol: float | None = None,
                    cap: int | None = None) -> tuple[QaoaParams, list[float]]:
    """Derivative-free minimisation of the QAOA expectation over 2p angles.

    ``shots=None`` drives the optimiser with the exact expectation; an integer
    switches to a sampled estimate with that many shots per evaluation.
    ``initial`` (zero-padded to depth p) replaces the first random start.

    Returns the best angles seen and the running-best expectation, recorded
    once per optimiser iteration and at the end of every restart.
    """
    restarts = Config.QAOA_RESTARTS if restarts is None else restarts
    max_iters = Config.QAOA_MAX_ITERS if max_iters is None else max_iters
    seed = Config.DEFAULT_SEED if seed is None else seed
    tol = Config.QAOA_TOL if tol is None else tol
    if p < 1:
        raise ParameterError(f"QAOA depth must be >= 1, got {p}")
    if restarts < 1:
        raise ParameterError(f"restarts must be >= 1, got {restarts}")
    if method not in METHODS:
        raise ParameterError(f"unknown optimiser {method!r}; choose from {', '.join(METHODS)}")

    n = _num_qubits(costfn)
    init_uniform(n, cap)
    diag = energy_table(costfn, cap=n)
    rng = np.random.default_rng(seed)
    shot_rng = np.random.default_rng(rng.integers(2 ** 32))

    best_value, best_vector = math.inf, None
    trace: list[float] = []

    def objective(vector):
        nonlocal best_value, best_vector
        probs = np.abs(_circuit(n, diag, QaoaParams.from_vector(vector))) ** 2
        if shots is None:
            value = float(probs @ diag)
        else:
            value = float(diag[_draw(probs, shots, shot_rng)].mean())
        if value < best_value:
            best_value, best_vector = value, np.array(vector)
        return value

    def record(*_):
        trace.append(best_value)

    for restart in range(restarts):
        if restart == 0 and initial is not None:
            start = initial.padded(p)
        else:
            start = random_params(p, rng)
        minimize(objective, start.as_vector(), method=method, tol=tol,
                 options={'maxiter': max_iters}, callback=record)
        record()

    params = QaoaParams.from_vector(best_vector)
    logger.info(f"QAOA p={p} ({method}, {restarts} restarts): best expectation {best_value}")
    return params, trace


# ----------------------------------------------------------------------
# Hardware-efficient ansatz
# ----------------------------------------------------------------------

def _ry(amps: np.ndarray, n: int, qubit: int, theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    view = amps.reshape(1 << (n - 1 - qubit), 2, 1 << qubit)
    zero = view[:, 0, :].copy()
    one = view[:, 1, :].copy()
    view[:, 0, :] = c * zero - s * one
    view[:, 1, :] = s * zero + c * one
    return amps


@dataclass(frozen=True)
class HardwareEfficientAnsatz:
    """RY on every qubit, with a CNOT ladder (0->1, 1->2, ...) between rotation layers.

    ``layers`` ladders give (layers + 1) * n angles; angle k * n + i rotates
    qubit i in rotation layer k. The circuit starts from |0...0>.
    """

    num_qubits: int
    layers: int = 2

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ParameterError(f"need at least one qubit, got {self.num_qubits}")
        if self.layers < 0:
            raise ParameterError(f"layers must be >= 0, got {self.layers}")

    @property
    def num_params(self) -> int:
        return (self.layers + 1) * self.num_qubits

    @cached_property
    def ladder(self) -> np.ndarray:
        """Gather index of the whole CNOT ladder: new[k] = old[ladder[k]]."""
        index = np.arange(1 << self.num_qubits)
        gather = index
        for control in range(self.num_qubits - 1):
            gate = index ^ (((index >> control) & 1) << (control + 1))
            gather = gather[gate]
        return gather

    def amplitudes(self, thetas) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=np.float64)
        if thetas.shape != (self.num_params,):
            raise DimensionError(f"ansatz takes {self.num_params} angles, got shape {thetas.shape}")
        n = self.num_qubits
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[0] = 1.0
        for k in range(self.layers + 1):
            for i in range(n):
                amps = _ry(amps, n, i, thetas[k * n + i])
            if k < self.layers:
                amps = amps[self.ladder]
        return amps

    def state(self, thetas, cap: int | None = None) -> StateVector:
        init_uniform(self.num_qubits, cap)
        return StateVector(self.amplitudes(thetas))


# ----------------------------------------------------------------------
# Landscape slices
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LandscapeSlice:
    """values[r, c] = expectation at center + offsets[c] * u + offsets[r] * v."""

    values: np.ndarray
    offsets: np.ndarray
    u: np.ndarray
    v: np.ndarray
    center: QaoaParams | tuple[float, ...]
    seed: int
    ansatz: str = 'qaoa'

    def metadata(self) -> dict:
        if isinstance(self.center, QaoaParams):
            center = self.center.to_dict()
        else:
            center = {'thetas': list(self.center)}
        return {
            'ansatz': self.ansatz,
            'center': center,
            'u': self.u.tolist(),
            'v': self.v.tolist(),
            'offsets': self.offsets.tolist(),
            'seed': self.seed,
        }


def landscape_slice(costfn: AnyCost, p: int, center=None, resolution: int = 25,
                    extent: float = math.pi, seed: int = 0, axis_aligned: bool = False,
                    cap: int | None = None, ansatz: str = 'qaoa') -> LandscapeSlice:
    """Exact expectation on a 2-D plane through ``center`` in parameter space.

    ``ansatz='qaoa'`` slices the 2p angles of a depth-p QAOA circuit and takes
    a ``QaoaParams`` center. ``ansatz='vqe'`` slices the (p + 1) * n angles of a
    hardware-efficient ansatz with p CNOT ladders and takes a flat angle vector.
    Centers default to all zeros. Directions are two seeded random orthonormal
    vectors, or the first two coordinates when ``axis_aligned`` (gamma_1 and
    beta_1 for QAOA).
    """
    if resolution < 2:
        raise ParameterError(f"grid resolution must be >= 2, got {resolution}")
    if ansatz not in ANSATZES:
        raise ParameterError(f"unknown ansatz {ansatz!r}; choose from {', '.join(ANSATZES)}")
    n = _num_qubits(costfn)
    init_uniform(n, cap)
    diag = energy_table(costfn, cap=n)

    if ansatz == 'qaoa':
        center = QaoaParams.zeros(p) if center is None else center.padded(p)
        origin = center.as_vector()
        second = p

        def circuit(vector):
            return _circuit(n, diag, QaoaParams.from_vector(vector))
    else:
        hea = HardwareEfficientAnsatz(n, p)
        origin = np.zeros(hea.num_params) if center is None else np.asarray(center, dtype=np.float64)
        if origin.shape != (hea.num_params,):
            raise DimensionError(f"VQE center needs {hea.num_params} angles, got shape {origin.shape}")
        center = tuple(origin.tolist())
        second = 1
        circuit = hea.amplitudes

    dim = len(origin)
    if axis_aligned:
        u, v = np.zeros(dim), np.zeros(dim)
        u[0], v[second] = 1.0, 1.0
    else:
        basis, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((dim, 2)))
        u, v = basis[:, 0], basis[:, 1]

    offsets = np.linspace(-extent, extent, resolution)
    values = np.empty((resolution, resolution))
    for r, b in enumerate(offsets):
        for c, a in enumerate(offsets):
            amps = circuit(origin + a * u + b * v)
            values[r, c] = float(np.abs(amps) ** 2 @ diag)
    logger.info(f"Landscape slice {ansatz} p={p} ({dim} parameters), {resolution}x{resolution} grid, extent {extent}")
    return LandscapeSlice(values, offsets, u, v, center, int(seed), ansatz)


# ----------------------------------------------------------------------
# End-to-end solve
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class QaoaRun:
    params: QaoaParams
    expectation: float
    trace: tuple[float, ...]
    counts: SampleCounts
    best_assignment: tuple[int, ...]
    best_energy: float


def solve_qaoa(costfn: AnyCost, p: int = 1, restarts: int | None = None, max_iters: int | None = None,
               seed: int = 0, method: str = 'Nelder-Mead', shots: int | None = None, exact: bool = True,
               cap: int | None = None) -> QaoaRun:
    """Optimise angles, then sample the final state and keep its best bitstring."""
    shots = Config.QAOA_SHOTS if shots is None else shots
    params, trace = optimize_angles(costfn, p, restarts, max_iters, seed, method,
                                    shots=None if exact else shots, cap=cap)
    n = _num_qubits(costfn)
    state = run_qaoa_circuit(n, costfn, params, cap)
    counts = sample(state, shots, seed)
    bits, energy = counts.best(costfn)
    return QaoaRun(params, expectation(state, costfn), tuple(trace), counts, tuple(bits), energy)


@dataclass(frozen=True)
class QaoaSolver:
    p: int = 1
    restarts: Optional[int] = None
    max_iters: Optional[int] = None
    method: str = 'Nelder-Mead'
    shots: Optional[int] = None
    exact: bool = True

    name = 'qaoa'

    def run(self, costfn: AnyCost, seed: int) -> QaoaRun:
        return solve_qaoa(costfn, self.p, self.restarts, self.max_iters, seed, self.method, self.shots, self.exact)

    def __call__(self, costfn: AnyCost, seed: int) -> AnnealResult:
        start = time.perf_counter()
        run = self.run(costfn, seed)
        return AnnealResult(run.best_assignment, run.best_energy, run.trace, int(seed), time.perf_counter() - start)

    def describe(self, costfn: AnyCost) -> dict:
        return {
            'name': self.name,
            'p': self.p,
            'restarts': Config.QAOA_RESTARTS if self.restarts is None else self.restarts,
            'max_iters': Config.QAOA_MAX_ITERS if self.max_iters is None else self.max_iters,
            'method': self.method,
            'shots': Config.QAOA_SHOTS if self.shots is None else self.shots,
            'exact': self.exact,
        }
