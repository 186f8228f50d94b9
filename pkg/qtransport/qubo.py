"""QUBO / HOBO / Ising models, penalty compilation and the exhaustive oracle.

Variables are 0-indexed integers in [0, num_vars). Basis index k of an
enumeration maps to the assignment with x_i = bit i of k.
"""

from __future__ import annotations

import logging
import math
import dataclasses
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping, Protocol, Sequence, Union

import numpy as np

from qtransport.config import Config
from qtransport.exceptions import DimensionError, DomainError, ParameterError, ResourceCapError

logger = logging.getLogger('main_logger')

CHUNK_BITS = 14
REL_TOL = 1e-9


class CostFunction(Protocol):
    num_vars: int

    def evaluate(self, x: Sequence[int]) -> float: ...

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray: ...


def _check_finite(value, what):
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{what} must be finite, got {value}")
    return value


def _check_index(i, num_vars):
    if not (0 <= i < num_vars):
        raise DimensionError(f"variable index {i} out of range [0, {num_vars})")
    return int(i)


def _as_bits(x, num_vars):
    bits = np.asarray(x)
    if bits.ndim != 1 or len(bits) != num_vars:
        raise DimensionError(f"assignment length {len(bits)} does not match num_vars={num_vars}")
    return bits.astype(np.float64)


@dataclass(frozen=True, eq=True)
class QuboModel:
    """Sparse quadratic objective  offset + sum_i h_i x_i + sum_{i<j} Q_ij x_i x_j.

    Use :meth:`build` to construct from raw coefficients; it folds diagonal
    terms into ``linear``, sums (i, j) and (j, i) into one canonical key and
    drops exact zeros. Treat instances as read-only.
    """

    num_vars: int
    linear: Mapping[int, float] = dataclasses.field(default_factory=dict)
    quadratic: Mapping[tuple[int, int], float] = dataclasses.field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        if self.num_vars < 0:
            raise ParameterError(f"num_vars must be nonnegative, got {self.num_vars}")
        for i, c in self.linear.items():
            _check_index(i, self.num_vars)
            _check_finite(c, f"linear[{i}]")
        for (i, j), c in self.quadratic.items():
            if i >= j:
                raise ParameterError(f"quadratic key ({i},{j}) must satisfy i < j; use QuboModel.build()")
            _check_index(i, self.num_vars)
            _check_index(j, self.num_vars)
            _check_finite(c, f"quadratic[({i},{j})]")
        _check_finite(self.offset, "offset")

    @classmethod
    def build(cls, num_vars, linear=None, quadratic=None, offset=0.0) -> "QuboModel":
        lin: dict[int, float] = {}
        quad: dict[tuple[int, int], float] = {}
        items = linear.items() if isinstance(linear, Mapping) else (linear or [])
        for i, c in items:
            i = _check_index(i, num_vars)
            lin[i] = lin.get(i, 0.0) + _check_finite(c, f"linear[{i}]")
        items = quadratic.items() if isinstance(quadratic, Mapping) else (
            ((i, j), c) for i, j, c in (quadratic or []))
        for (i, j), c in items:
            i, j = _check_index(i, num_vars), _check_index(j, num_vars)
            c = _check_finite(c, f"quadratic[({i},{j})]")
            if i == j:
                # x_i^2 = x_i for binary x
                lin[i] = lin.get(i, 0.0) + c
                continue
            key = (min(i, j), max(i, j))
            quad[key] = quad.get(key, 0.0) + c
        lin = {i: c for i, c in sorted(lin.items()) if c != 0.0}
        quad = {k: c for k, c in sorted(quad.items()) if c != 0.0}
        return cls(num_vars=int(num_vars), linear=lin, quadratic=quad, offset=float(offset))

    @classmethod
    def from_matrix(cls, Q, h=None, offset=0.0) -> "QuboModel":
        """Build from a square matrix (any triangle / symmetric) and optional h."""
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionError("Q must be a square 2-D array")
        n = Q.shape[0]
        quad = [(i, j, Q[i, j]) for i in range(n) for j in range(n) if Q[i, j] != 0.0]
        linear = [] if h is None else list(enumerate(np.asarray(h, dtype=float)))
        return cls.build(n, linear=linear, quadratic=quad, offset=offset)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    @cached_property
    def _arrays(self):
        h = np.zeros(self.num_vars)
        for i, c in self.linear.items():
            h[i] = c
        if self.quadratic:
            keys = np.array(list(self.quadratic), dtype=np.int64)
            coeffs = np.fromiter(self.quadratic.values(), dtype=np.float64, count=len(self.quadratic))
            return h, keys[:, 0], keys[:, 1], coeffs
        empty = np.zeros(0, dtype=np.int64)
        return h, empty, empty, np.zeros(0)

    def evaluate(self, x) -> float:
        bits = _as_bits(x, self.num_vars)
        energy = self.offset
        energy += sum(c * bits[i] for i, c in self.linear.items())
        energy += sum(c * bits[i] * bits[j] for (i, j), c in self.quadratic.items())
        return float(energy)

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        h, rows, cols, coeffs = self._arrays
        energies = np.full(X.shape[0], self.offset) + X @ h
        if len(coeffs):
            energies += (X[:, rows] * X[:, cols]) @ coeffs
        return energies

    # ------------------------------------------------------------------
    # Conversions
    # ------------------------------------------------------------------

    def to_matrix(self) -> np.ndarray:
        """Upper-triangular Q with h on the diagonal (offset not included)."""
        Q = np.zeros((self.num_vars, self.num_vars))
        for i, c in self.linear.items():
            Q[i, i] = c
        for (i, j), c in self.quadratic.items():
            Q[i, j] = c
        return Q

    def symmetric_couplings(self) -> np.ndarray:
        """Dense symmetric W with W_ij = W_ji = Q_ij and zero diagonal."""
        W = np.zeros((self.num_vars, self.num_vars))
        for (i, j), c in self.quadratic.items():
            W[i, j] = W[j, i] = c
        return W

    def to_polynomial(self) -> "PseudoBooleanPolynomial":
        terms: dict[tuple[int, ...], float] = {}
        if self.offset:
            terms[()] = self.offset
        terms.update({(i,): c for i, c in self.linear.items()})
        terms.update(dict(self.quadratic))
        return PseudoBooleanPolynomial(self.num_vars, terms)

    def max_abs_coefficient(self) -> float:
        values = list(self.linear.values()) + list(self.quadratic.values())
        return max((abs(v) for v in values), default=0.0)

    def __repr__(self) -> str:
        return (f"QuboModel(num_vars={self.num_vars}, linear_terms={len(self.linear)}, "
                f"quadratic_terms={len(self.quadratic)}, offset={self.offset})")


@dataclass(frozen=True, eq=True)
class IsingModel:
    """Spin form  C0 + sum_i w_i s_i + sum_{i<j} J_ij s_i s_j  with s in {+1, -1}.

    ``coupling`` stores one coefficient per unordered pair with both
    symmetric contributions combined.
    """

    num_vars: int
    field: Mapping[int, float] = dataclasses.field(default_factory=dict)
    coupling: Mapping[tuple[int, int], float] = dataclasses.field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        for i, c in self.field.items():
            _check_index(i, self.num_vars)
            _check_finite(c, f"field[{i}]")
        for (i, j), c in self.coupling.items():
            if i >= j:
                raise ParameterError(f"coupling key ({i},{j}) must satisfy i < j")
            _check_index(i, self.num_vars)
            _check_index(j, self.num_vars)
            _check_finite(c, f"coupling[({i},{j})]")
        _check_finite(self.offset, "offset")

    def evaluate(self, spins) -> float:
        s = np.asarray(spins)
        if s.ndim != 1 or len(s) != self.num_vars:
            raise DimensionError(f"spin vector length {len(s)} does not match num_vars={self.num_vars}")
        if not np.all((s == 1) | (s == -1)):
            raise DomainError(f"spins must be +1 or -1, got {s.tolist()}")
        energy = self.offset
        energy += sum(c * s[i] for i, c in self.field.items())
        energy += sum(c * s[i] * s[j] for (i, j), c in self.coupling.items())
        return float(energy)

    def evaluate_batch_spins(self, S) -> np.ndarray:
        S = np.asarray(S, dtype=np.float64)
        energies = np.full(S.shape[0], self.offset)
        for i, c in self.field.items():
            energies += c * S[:, i]
        for (i, j), c in self.coupling.items():
            energies += c * S[:, i] * S[:, j]
        return energies


@dataclass(frozen=True, eq=True)
class PseudoBooleanPolynomial:
    """Arbitrary-degree binary cost  sum_T c_T prod_{k in T} x_k.

    Terms are keyed by sorted index tuples; ``()`` is the constant term.
    Arithmetic uses x_k^2 = x_k, so products of overlapping monomials merge.
    """

    num_vars: int
    terms: Mapping[tuple[int, ...], float] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, c in self.terms.items():
            if len(set(key)) != len(key):
                raise ParameterError(f"term {key} repeats a variable")
            if list(key) != sorted(key):
                raise ParameterError(f"term {key} must be sorted; use PseudoBooleanPolynomial.build()")
            for k in key:
                _check_index(k, self.num_vars)
            _check_finite(c, f"terms[{key}]")

    @classmethod
    def build(cls, num_vars, terms) -> "PseudoBooleanPolynomial":
        merged: dict[tuple[int, ...], float] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for key, c in items:
            key = tuple(sorted(set(int(k) for k in key)))
            merged[key] = merged.get(key, 0.0) + _check_finite(c, f"terms[{key}]")
        return cls(int(num_vars), {k: v for k, v in sorted(merged.items(), key=_term_order) if v != 0.0})

    @classmethod
    def combine(cls, num_vars, weighted) -> "PseudoBooleanPolynomial":
        """Sum of (coefficient, polynomial) pairs, merged in a single pass."""
        items = [(key, coef * c) for coef, poly in weighted for key, c in poly.terms.items()]
        return cls.build(num_vars, items)

    @classmethod
    def constant(cls, num_vars, value) -> "PseudoBooleanPolynomial":
        return cls.build(num_vars, {(): value})

    @classmethod
    def variable(cls, num_vars, k) -> "PseudoBooleanPolynomial":
        return cls.build(num_vars, {(k,): 1.0})

    @property
    def degree(self) -> int:
        return max((len(k) for k in self.terms), default=0)

    @property
    def constant_term(self) -> float:
        return self.terms.get((), 0.0)

    # ------------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, PseudoBooleanPolynomial):
            if other.num_vars != self.num_vars:
                raise DimensionError(f"num_vars mismatch: {self.num_vars} vs {other.num_vars}")
            return other
        return PseudoBooleanPolynomial.constant(self.num_vars, other)

    def __add__(self, other):
        other = self._coerce(other)
        return PseudoBooleanPolynomial.build(self.num_vars, list(self.terms.items()) + list(other.terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, PseudoBooleanPolynomial):
            c = float(other)
            return PseudoBooleanPolynomial.build(self.num_vars, {k: v * c for k, v in self.terms.items()})
        other = self._coerce(other)
        product: dict[tuple[int, ...], float] = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                key = tuple(sorted(set(ka) | set(kb)))
                product[key] = product.get(key, 0.0) + ca * cb
        return PseudoBooleanPolynomial.build(self.num_vars, product)

    __rmul__ = __mul__

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def evaluate(self, x) -> float:
        bits = _as_bits(x, self.num_vars)
        return float(sum(c * (all(bits[k] for k in key)) for key, c in self.terms.items()))

    def evaluate_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        energies = np.zeros(X.shape[0])
        for key, c in self.terms.items():
            if key:
                energies += c * np.prod(X[:, list(key)], axis=1)
            else:
                energies += c
        return energies

    def to_qubo(self) -> QuboModel:
        if self.degree > 2:
            raise ParameterError(f"polynomial of degree {self.degree} has no QUBO form")
        linear = [(key[0], c) for key, c in self.terms.items() if len(key) == 1]
        quad = [(key[0], key[1], c) for key, c in self.terms.items() if len(key) == 2]
        return QuboModel.build(self.num_vars, linear, quad, offset=self.constant_term)

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for k, c in self.terms.items() if k), default=0.0)

    def __repr__(self) -> str:
        return f"PseudoBooleanPolynomial(num_vars={self.num_vars}, terms={len(self.terms)}, degree={self.degree})"


def _term_order(item):
    key = item[0]
    return len(key), key


BinaryCost = Union[QuboModel, PseudoBooleanPolynomial]
AnyCost = Union[QuboModel, PseudoBooleanPolynomial, IsingModel]


# ----------------------------------------------------------------------
# Operations
# ----------------------------------------------------------------------

def evaluate_qubo(model: QuboModel, x) -> float:
    return model.evaluate(x)


def evaluate_ising(ising: IsingModel, spins) -> float:
    return ising.evaluate(spins)


def evaluate_hobo(poly: PseudoBooleanPolynomial, x) -> float:
    return poly.evaluate(x)


def default_penalty_weight(costfn: BinaryCost) -> float:
    """Coefficient-sum dominance bound 1 + sum|h| + sum|Q|."""
    if isinstance(costfn, PseudoBooleanPolynomial):
        return 1.0 + sum(abs(c) for k, c in costfn.terms.items() if k)
    return 1.0 + sum(abs(c) for c in costfn.linear.values()) + sum(abs(c) for c in costfn.quadratic.values())


def _coefficient_vector(a, num_vars):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1 or len(a) != num_vars:
        raise DimensionError(f"constraint vector length {len(a)} does not match num_vars={num_vars}")
    if not np.all(np.isfinite(a)):
        raise ParameterError("constraint coefficients must be finite")
    return a


def _squared_penalty(model: QuboModel, a: np.ndarray, b: float, lam: float) -> QuboModel:
    """Return model + lam * (a.x - b)^2 with x_i^2 folded to x_i."""
    support = [i for i in range(len(a)) if a[i] != 0.0]
    linear = list(model.linear.items())
    linear += [(i, lam * (a[i] * a[i] - 2.0 * b * a[i])) for i in support]
    quad = [(i, j, c) for (i, j), c in model.quadratic.items()]
    quad += [(i, j, 2.0 * lam * a[i] * a[j]) for n, i in enumerate(support) for j in support[n + 1:]]
    return QuboModel.build(model.num_vars, linear, quad, offset=model.offset + lam * b * b)


def _penalty_weight(model, lam):
    if lam is None:
        return default_penalty_weight(model)
    lam = float(lam)
    if not (lam > 0.0 and math.isfinite(lam)):
        raise ParameterError(f"penalty weight must be positive, got {lam}")
    return lam


def add_equality_constraint(model: QuboModel, a, b: float, lam: float | None = None) -> QuboModel:
    """Penalise a.x = b with lam * (a.x - b)^2; lam defaults to the dominance bound."""
    lam = _penalty_weight(model, lam)
    a = _coefficient_vector(a, model.num_vars)
    return _squared_penalty(model, a, _check_finite(b, "b"), lam)


def slack_weights(b: int) -> list[int]:
    """Binary slack weights 1, 2, 4, ... with the top weight trimmed so the maximum is b."""
    if b <= 0:
        return []
    m = math.ceil(math.log2(b + 1))
    weights = [1 << k for k in range(m - 1)]
    weights.append(b - (sum(weights)))
    return weights


def add_inequality_constraint(model: QuboModel, a, b: int, lam: float | None = None) -> tuple[QuboModel, range]:
    """Penalise a.x <= b through appended slack bits s: lam * (a.x + s - b)^2.

    Returns the extended model and the index range of the slack variables.
    """
    if b < 0:
        raise ParameterError(f"inequality bound must be nonnegative, got {b}")
    if float(b) != int(b):
        raise ParameterError(f"inequality bound must be an integer, got {b}")
    b = int(b)
    lam = _penalty_weight(model, lam)
    a = _coefficient_vector(a, model.num_vars)
    if np.any(a < 0):
        raise ParameterError("inequality coefficients must be nonnegative")

    weights = slack_weights(b)
    start = model.num_vars
    widened = QuboModel.build(start + len(weights), model.linear, model.quadratic, model.offset)
    full = np.concatenate([a, np.asarray(weights, dtype=np.float64)])
    logger.debug(f"Inequality constraint with bound {b}: {len(weights)} slack bits at {start}")
    return _squared_penalty(widened, full, float(b), lam), range(start, start + len(weights))


def to_ising(model: QuboModel) -> IsingModel:
    """Substitute x = (1 - s) / 2.

    w_i = -h_i/2 - sum_j Q_ij/4,  J_ij = Q_ij/4,  C0 = offset + sum h/2 + sum Q/4.
    """
    fields = {i: -0.5 * c for i, c in model.linear.items()}
    offset = model.offset + 0.5 * sum(model.linear.values())
    coupling = {}
    for (i, j), c in model.quadratic.items():
        coupling[(i, j)] = 0.25 * c
        fields[i] = fields.get(i, 0.0) - 0.25 * c
        fields[j] = fields.get(j, 0.0) - 0.25 * c
        offset += 0.25 * c
    fields = {i: c for i, c in sorted(fields.items()) if c != 0.0}
    return IsingModel(model.num_vars, fields, coupling, offset)


def ising_to_qubo(ising: IsingModel) -> QuboModel:
    """Substitute s = 1 - 2x; exact inverse of :func:`to_ising`."""
    linear = [(i, -2.0 * c) for i, c in ising.field.items()]
    offset = ising.offset + sum(ising.field.values())
    quad = []
    for (i, j), c in ising.coupling.items():
        quad.append((i, j, 4.0 * c))
        linear += [(i, -2.0 * c), (j, -2.0 * c)]
        offset += c
    return QuboModel.build(ising.num_vars, linear, quad, offset)


def as_binary_cost(costfn: AnyCost) -> BinaryCost:
    if isinstance(costfn, IsingModel):
        return ising_to_qubo(costfn)
    if isinstance(costfn, (QuboModel, PseudoBooleanPolynomial)):
        return costfn
    raise ParameterError(f"unsupported cost function type {type(costfn).__name__}")


# ----------------------------------------------------------------------
# Enumeration
# ----------------------------------------------------------------------

def basis_bits(indices: np.ndarray, num_vars: int) -> np.ndarray:
    """Row r holds the assignment of basis index indices[r] (x_i = bit i)."""
    shifts = np.arange(num_vars, dtype=np.int64)
    return ((indices[:, None] >> shifts) & 1).astype(np.float64)


def iter_energy_chunks(costfn: BinaryCost, chunk_bits: int = CHUNK_BITS) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    n = costfn.num_vars
    total = 1 << n
    step = 1 << min(chunk_bits, n)
    for start in range(0, total, step):
        indices = np.arange(start, min(start + step, total), dtype=np.int64)
        X = basis_bits(indices, n)
        yield indices, X, costfn.evaluate_batch(X)


def _check_cap(num_vars, cap, what):
    if num_vars > cap:
        raise ResourceCapError(f"{what} needs 2^{num_vars} states; cap is 2^{cap}")


def energy_table(costfn: AnyCost, cap: int | None = None) -> np.ndarray:
    """Energies of all 2^n assignments, entry k for the assignment x_i = bit i of k."""
    costfn = as_binary_cost(costfn)
    _check_cap(costfn.num_vars, cap if cap is not None else Config.STATEVECTOR_CAP, "energy table")
    return np.concatenate([e for _, _, e in iter_energy_chunks(costfn)])


def brute_force_min(costfn: AnyCost, cap: int | None = None) -> tuple[list[int], float]:
    """Global minimiser by enumeration; ties go to the lexicographically smallest bitstring."""
    costfn = as_binary_cost(costfn)
    n = costfn.num_vars
    _check_cap(n, cap if cap is not None else Config.BRUTE_FORCE_CAP, "brute force")
    # lexicographic order on (x_0, ..., x_{n-1}) reads x_0 as the most significant bit
    lex_weights = (1 << np.arange(n - 1, -1, -1, dtype=np.int64)) if n else np.zeros(0, dtype=np.int64)

    best_energy = math.inf
    best_key = None
    best_bits = None
    for _, X, energies in iter_energy_chunks(costfn):
        chunk_min = float(energies.min())
        tol = REL_TOL * (1.0 + abs(min(chunk_min, best_energy)))
        if chunk_min > best_energy + tol:
            continue
        reference = min(chunk_min, best_energy)
        tied = np.flatnonzero(energies <= reference + tol)
        keys = X[tied].astype(np.int64) @ lex_weights
        pick = int(np.argmin(keys))
        key = int(keys[pick])
        if chunk_min < best_energy - tol or best_key is None or key < best_key:
            best_key, best_bits = key, X[tied[pick]]
        best_energy = reference

    bits = [int(b) for b in best_bits]
    energy = costfn.evaluate(bits)
    logger.info(f"Brute force over 2^{n} assignments: minimum {energy}")
    return bits, energy
