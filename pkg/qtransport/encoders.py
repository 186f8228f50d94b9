"""Transport-problem encoders: TSP (one-hot and binary), traffic signals, two-phase CVRP.

Every encoder returns a model from :mod:`qtransport.qubo` together with the
layout needed to decode an assignment back into tours, modes or routes.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from qtransport.exceptions import DimensionError, DomainError, ParameterError, ResourceCapError
from qtransport.qubo import (
    IsingModel,
    PseudoBooleanPolynomial,
    QuboModel,
    add_equality_constraint,
    add_inequality_constraint,
    default_penalty_weight,
)

logger = logging.getLogger('main_logger')

TOUR_ORACLE_CAP = 10


# ----------------------------------------------------------------------
# TSP
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TspInstance:
    """Distance matrix d_ij >= 0 with zero diagonal; symmetry not required."""

    distance: np.ndarray

    def __post_init__(self) -> None:
        d = np.array(self.distance, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
            raise DimensionError(f"distance must be a non-empty square matrix, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise DomainError("distances must be finite")
        if np.any(d < 0):
            raise DomainError("distances must be nonnegative")
        if np.any(np.diag(d) != 0):
            raise DomainError("distance matrix must have a zero diagonal")
        d.setflags(write=False)
        object.__setattr__(self, 'distance', d)

    @property
    def num_cities(self) -> int:
        return self.distance.shape[0]

    @classmethod
    def from_points(cls, points) -> "TspInstance":
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        diff = pts[:, None, :] - pts[None, :, :]
        return cls(np.sqrt((diff ** 2).sum(axis=-1)))


def random_tsp(num_cities: int, seed: int = 0) -> TspInstance:
    """Euclidean instance on points drawn uniformly from the unit square."""
    rng = np.random.default_rng(seed)
    return TspInstance.from_points(rng.random((num_cities, 2)))


def _check_permutation(tour, n):
    tour = [int(c) for c in tour]
    if sorted(tour) != list(range(n)):
        raise DomainError(f"tour {tour} is not a permutation of range({n})")
    return tour


def tour_length(inst: TspInstance, tour: Sequence[int]) -> float:
    tour = _check_permutation(tour, inst.num_cities)
    d = inst.distance
    return float(sum(d[tour[p], tour[(p + 1) % len(tour)]] for p in range(len(tour))))


def best_tour(inst: TspInstance) -> tuple[list[int], float]:
    """Permutation oracle with city 0 pinned at position 0."""
    n = inst.num_cities
    if n > TOUR_ORACLE_CAP:
        raise ResourceCapError(f"tour oracle enumerates (N-1)! tours; N={n} exceeds {TOUR_ORACLE_CAP}")
    best, best_len = None, math.inf
    for rest in itertools.permutations(range(1, n)):
        tour = [0, *rest]
        length = tour_length(inst, tour)
        if length < best_len:
            best, best_len = tour, length
    return best, best_len


@dataclass(frozen=True)
class TourDecoding:
    """Result of decoding a TSP assignment.

    ``positions`` holds the city read at each position (None when the
    position is empty, ambiguous or an invalid code).
    """

    positions: tuple[Optional[int], ...]
    violated_cities: tuple[int, ...] = ()
    violated_positions: tuple[int, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violated_cities and not self.violated_positions

    @property
    def tour(self) -> Optional[list[int]]:
        return list(self.positions) if self.feasible else None

    def to_dict(self) -> dict:
        return {
            'feasible': self.feasible,
            'tour': self.tour,
            'positions': list(self.positions),
            'violated_cities': list(self.violated_cities),
            'violated_positions': list(self.violated_positions),
        }


def _rotate_to_start(tour):
    k = tour.index(0)
    return tour[k:] + tour[:k]


@dataclass(frozen=True)
class OneHotLayout:
    """x_{i,p} = 1 iff city i is visited at position p.

    Full mode maps (i, p) to i*N + p. Fixed-start mode pins city 0 to
    position 0 and keeps only cities/positions 1..N-1, (N-1)^2 variables.
    """

    num_cities: int
    fixed_start: bool = False

    @property
    def num_vars(self) -> int:
        m = self.num_cities - 1 if self.fixed_start else self.num_cities
        return m * m

    def is_pinned(self, city, position) -> bool:
        return self.fixed_start and (city == 0 or position == 0)

    def index(self, city, position) -> int:
        n = self.num_cities
        if not (0 <= city < n and 0 <= position < n):
            raise DimensionError(f"(city={city}, position={position}) outside a {n}-city layout")
        if self.is_pinned(city, position):
            raise DomainError(f"(city={city}, position={position}) is pinned in fixed-start mode")
        if self.fixed_start:
            return (city - 1) * (n - 1) + (position - 1)
        return city * n + position

    def fixed_value(self, city, position) -> int:
        """Value of a pinned variable (1 only for city 0 at position 0)."""
        return int(city == 0 and position == 0)

    def encode(self, tour: Sequence[int]) -> list[int]:
        tour = _check_permutation(tour, self.num_cities)
        if self.fixed_start:
            tour = _rotate_to_start(tour)
        bits = [0] * self.num_vars
        for p, city in enumerate(tour):
            if not self.is_pinned(city, p):
                bits[self.index(city, p)] = 1
        return bits

    def grid(self, x) -> np.ndarray:
        """Full N x N matrix, rows = cities, columns = positions."""
        if len(x) != self.num_vars:
            raise DimensionError(f"assignment length {len(x)} does not match {self.num_vars} one-hot variables")
        n = self.num_cities
        m = np.zeros((n, n), dtype=int)
        for i in range(n):
            for p in range(n):
                m[i, p] = self.fixed_value(i, p) if self.is_pinned(i, p) else int(x[self.index(i, p)])
        return m


def decode_one_hot(x, layout: OneHotLayout) -> TourDecoding:
    m = layout.grid(x)
    rows, cols = m.sum(axis=1), m.sum(axis=0)
    positions = tuple(int(np.argmax(m[:, p])) if cols[p] == 1 else None for p in range(layout.num_cities))
    return TourDecoding(
        positions=positions,
        violated_cities=tuple(int(i) for i in np.flatnonzero(rows != 1)),
        violated_positions=tuple(int(p) for p in np.flatnonzero(cols != 1)),
    )


def _one_hot_value(layout, city, position):
    """Variable index, or the constant 0/1 for a pinned slot."""
    if layout.is_pinned(city, position):
        return None, layout.fixed_value(city, position)
    return layout.index(city, position), None


def tsp_one_hot_objective(inst: TspInstance, fixed_start: bool = False) -> tuple[QuboModel, OneHotLayout]:
    """Tour length sum_p sum_{i,j} d_ij x_{i,p} x_{j,p+1}, positions mod N.

    For N >= 3 there are N*N*(N-1) couplings on a complete asymmetric d. At
    N = 2 positions p+1 and p-1 coincide, so each pair stores d_01 + d_10 once.
    """
    n = inst.num_cities
    if n < 2:
        raise ParameterError(f"TSP needs at least 2 cities, got {n}")
    layout = OneHotLayout(n, fixed_start)
    d = inst.distance
    linear, quad = [], []
    for p in range(n):
        q = (p + 1) % n
        for i in range(n):
            a, a_const = _one_hot_value(layout, i, p)
            if a_const == 0:
                continue
            for j in range(n):
                if i == j or d[i, j] == 0.0:
                    continue
                b, b_const = _one_hot_value(layout, j, q)
                if b_const == 0:
                    continue
                if a is not None and b is not None:
                    quad.append((a, b, d[i, j]))
                else:
                    linear.append((a if a is not None else b, d[i, j]))
    return QuboModel.build(layout.num_vars, linear, quad), layout


def default_tsp_penalty(inst: TspInstance) -> float:
    """Every tour costs at most N * max d; any violation costs at least lambda."""
    return 1.0 + inst.num_cities * float(inst.distance.max())


def encode_tsp_one_hot(inst: TspInstance, lam: float | None = None,
                       fixed_start: bool = False) -> tuple[QuboModel, OneHotLayout]:
    model, layout = tsp_one_hot_objective(inst, fixed_start)
    lam = default_tsp_penalty(inst) if lam is None else lam
    n = inst.num_cities
    free = range(1, n) if fixed_start else range(n)
    for i in free:
        row = np.zeros(layout.num_vars)
        row[[layout.index(i, p) for p in free]] = 1.0
        model = add_equality_constraint(model, row, 1.0, lam)
    for p in free:
        col = np.zeros(layout.num_vars)
        col[[layout.index(i, p) for i in free]] = 1.0
        model = add_equality_constraint(model, col, 1.0, lam)
    logger.info(f"One-hot TSP encoding: N={n}, fixed_start={fixed_start}, {layout.num_vars} variables, lambda={lam}")
    return model, layout


@dataclass(frozen=True)
class BinaryLayout:
    """Position p stores the visited city as an ell-bit code, bit k at p*ell + k (little-endian)."""

    num_cities: int

    @property
    def ell(self) -> int:
        return max(1, math.ceil(math.log2(self.num_cities)))

    @property
    def num_vars(self) -> int:
        return self.num_cities * self.ell

    def index(self, position, bit) -> int:
        if not (0 <= position < self.num_cities and 0 <= bit < self.ell):
            raise DimensionError(f"(position={position}, bit={bit}) outside the binary layout")
        return position * self.ell + bit

    def encode(self, tour: Sequence[int]) -> list[int]:
        tour = _check_permutation(tour, self.num_cities)
        return [(city >> k) & 1 for city in tour for k in range(self.ell)]

    def codes(self, x) -> list[int]:
        if len(x) != self.num_vars:
            raise DimensionError(f"assignment length {len(x)} does not match {self.num_vars} binary variables")
        return [sum(int(x[self.index(p, k)]) << k for k in range(self.ell)) for p in range(self.num_cities)]


def decode_binary(x, layout: BinaryLayout) -> TourDecoding:
    codes = layout.codes(x)
    n = layout.num_cities
    invalid = tuple(p for p, c in enumerate(codes) if c >= n)
    seen = [c for c in codes if c < n]
    repeated = tuple(sorted({c for c in seen if seen.count(c) > 1}))
    return TourDecoding(
        positions=tuple(c if c < n else None for c in codes),
        violated_cities=repeated,
        violated_positions=invalid,
    )


def _code_indicator(layout: BinaryLayout, code: int, position: int) -> PseudoBooleanPolynomial:
    """delta_{code,p} = prod_k [1 - (x_k - code_k)^2], 1 iff position p holds code."""
    n = layout.num_vars
    poly = PseudoBooleanPolynomial.constant(n, 1.0)
    for k in range(layout.ell):
        x = PseudoBooleanPolynomial.variable(n, layout.index(position, k))
        poly = poly * (x if (code >> k) & 1 else 1.0 - x)
    return poly


def encode_tsp_binary(inst: TspInstance, penalty: float | None = None) -> tuple[PseudoBooleanPolynomial, BinaryLayout]:
    n = inst.num_cities
    if n < 2:
        raise ParameterError(f"TSP needs at least 2 cities, got {n}")
    layout = BinaryLayout(n)
    nv = layout.num_vars
    d = inst.distance
    big = default_tsp_penalty(inst) if penalty is None else float(penalty)
    delta = [[_code_indicator(layout, c, p) for c in range(1 << layout.ell)] for p in range(n)]

    parts = []
    for p in range(n):
        q = (p + 1) % n
        for i in range(n):
            onward = PseudoBooleanPolynomial.combine(nv, [(d[i, j], delta[q][j]) for j in range(n) if j != i and d[i, j]])
            if onward.terms:
                parts.append((1.0, delta[p][i] * onward))
        for c in range(n, 1 << layout.ell):
            parts.append((big, delta[p][c]))
    for i in range(n):
        visits = PseudoBooleanPolynomial.combine(nv, [(1.0, delta[p][i]) for p in range(n)]) - 1.0
        parts.append((big, visits * visits))

    poly = PseudoBooleanPolynomial.combine(nv, parts)
    logger.info(f"Binary TSP encoding: N={n}, ell={layout.ell}, {nv} variables, "
                f"{len(poly.terms)} terms, degree {poly.degree}")
    return poly, layout


# ----------------------------------------------------------------------
# Traffic signals
# ----------------------------------------------------------------------

EAST_WEST = 1
NORTH_SOUTH = -1


@dataclass(frozen=True)
class TrafficGrid:
    """rows x cols intersections in row-major order, one spin each.

    Spin +1 is the east-west mode, -1 the north-south mode. ``prev`` holds
    the previous mode per intersection (0 when unknown).
    """

    rows: int
    cols: int
    q_ns: tuple[float, ...]
    q_ew: tuple[float, ...]
    prev: tuple[int, ...] = ()
    bias_weight: float = 1.0
    switch_weight: float = 0.0
    green_wave_weight: float = 0.0

    def __post_init__(self) -> None:
        size = self.rows * self.cols
        if self.rows < 1 or self.cols < 1:
            raise ParameterError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        prev = tuple(self.prev) if len(self.prev) else (0,) * size
        object.__setattr__(self, 'q_ns', tuple(float(q) for q in self.q_ns))
        object.__setattr__(self, 'q_ew', tuple(float(q) for q in self.q_ew))
        object.__setattr__(self, 'prev', tuple(int(s) for s in prev))
        for name in ('q_ns', 'q_ew', 'prev'):
            if len(getattr(self, name)) != size:
                raise DimensionError(f"{name} has {len(getattr(self, name))} entries, grid has {size}")
        if any(q < 0 for q in self.q_ns + self.q_ew):
            raise DomainError("queue lengths must be nonnegative")
        if any(s not in (-1, 0, 1) for s in self.prev):
            raise DomainError("previous modes must be +1, -1 or 0")
        if min(self.bias_weight, self.switch_weight, self.green_wave_weight) < 0:
            raise ParameterError("traffic weights must be nonnegative")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def neighbors(self) -> list[tuple[int, int]]:
        pairs = []
        for r in range(self.rows):
            for c in range(self.cols):
                i = r * self.cols + c
                if c + 1 < self.cols:
                    pairs.append((i, i + 1))
                if r + 1 < self.rows:
                    pairs.append((i, i + self.cols))
        return pairs


def encode_traffic_grid(grid: TrafficGrid) -> IsingModel:
    """E = sum_i A (q_ns - q_ew) s_i - sum_i B prev_i s_i - sum_<ij> G s_i s_j."""
    fields = {}
    for i in range(grid.size):
        w = grid.bias_weight * (grid.q_ns[i] - grid.q_ew[i]) - grid.switch_weight * grid.prev[i]
        if w:
            fields[i] = w
    coupling = {pair: -grid.green_wave_weight for pair in grid.neighbors()} if grid.green_wave_weight else {}
    return IsingModel(grid.size, fields, coupling, 0.0)


def traffic_energy(grid: TrafficGrid, spins) -> float:
    return encode_traffic_grid(grid).evaluate(spins)


def local_control_modes(grid: TrafficGrid) -> list[int]:
    """Per-intersection baseline: serve the longer queue, ties keep the previous mode."""
    modes = []
    for i in range(grid.size):
        if grid.q_ns[i] > grid.q_ew[i]:
            modes.append(NORTH_SOUTH)
        elif grid.q_ew[i] > grid.q_ns[i]:
            modes.append(EAST_WEST)
        else:
            modes.append(grid.prev[i] or EAST_WEST)
    return modes


def decode_traffic(spins, grid: TrafficGrid) -> list[list[str]]:
    if len(spins) != grid.size:
        raise DimensionError(f"got {len(spins)} spins for a grid of {grid.size}")
    labels = ['EW' if int(s) == EAST_WEST else 'NS' for s in spins]
    return [labels[r * grid.cols:(r + 1) * grid.cols] for r in range(grid.rows)]


# ----------------------------------------------------------------------
# Capacitated vehicle routing, two-phase
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Customer:
    x: float
    y: float
    demand: int


@dataclass(frozen=True)
class CvrpInstance:
    depot: tuple[float, float]
    customers: tuple[Customer, ...]
    capacity: int
    vehicles: int

    def __post_init__(self) -> None:
        object.__setattr__(self, 'customers', tuple(self.customers))
        if self.vehicles < 1:
            raise ParameterError(f"need at least one vehicle, got {self.vehicles}")
        if self.capacity < 1:
            raise ParameterError(f"capacity must be positive, got {self.capacity}")
        if any(c.demand <= 0 for c in self.customers):
            raise ParameterError("customer demands must be positive")
        total = sum(c.demand for c in self.customers)
        if total > self.capacity * self.vehicles:
            raise ParameterError(f"total demand {total} exceeds fleet capacity {self.capacity * self.vehicles}")

    def points(self) -> np.ndarray:
        """Depot first, then customers."""
        return np.array([self.depot] + [(c.x, c.y) for c in self.customers], dtype=np.float64)


def dispersion_seeds(inst: CvrpInstance) -> list[Optional[int]]:
    """Greedy max-min seeds: farthest from the depot and from each other.

    Entries are customer indices; vehicles beyond the customer count get
    None (seeded at the depot).
    """
    pts = inst.points()
    chosen: list[int] = []
    anchors = [pts[0]]
    for _ in range(min(inst.vehicles, len(inst.customers))):
        best, best_gap = None, -1.0
        for c in range(len(inst.customers)):
            if c in chosen:
                continue
            gap = min(float(np.linalg.norm(pts[c + 1] - a)) for a in anchors)
            if gap > best_gap:
                best, best_gap = c, gap
        chosen.append(best)
        anchors.append(pts[best + 1])
    return chosen + [None] * (inst.vehicles - len(chosen))


@dataclass(frozen=True)
class ClusterRoute:
    vehicle: int
    customers: tuple[int, ...]
    instance: TspInstance


@dataclass(frozen=True)
class CvrpPlan:
    clusters: tuple[tuple[int, ...], ...]
    routes: tuple[tuple[int, ...], ...]
    total_cost: float


@dataclass(frozen=True, eq=False)
class CvrpEncoding:
    """Phase-1 clustering QUBO over y_{c,v} = customer c rides vehicle v, at c*V + v."""

    instance: CvrpInstance
    qubo: QuboModel
    seeds: tuple[Optional[int], ...]
    slack_ranges: tuple[range, ...] = field(default=())

    @property
    def num_assignment_vars(self) -> int:
        return len(self.instance.customers) * self.instance.vehicles

    def index(self, customer, vehicle) -> int:
        return customer * self.instance.vehicles + vehicle

    def decode_clusters(self, x) -> dict:
        if len(x) != self.qubo.num_vars:
            raise DimensionError(f"assignment length {len(x)} does not match {self.qubo.num_vars} variables")
        inst = self.instance
        clusters = [[] for _ in range(inst.vehicles)]
        unassigned, duplicated = [], []
        for c in range(len(inst.customers)):
            rides = [v for v in range(inst.vehicles) if x[self.index(c, v)]]
            if not rides:
                unassigned.append(c)
            elif len(rides) > 1:
                duplicated.append(c)
            for v in rides:
                clusters[v].append(c)
        load = [sum(inst.customers[c].demand for c in cl) for cl in clusters]
        overloaded = [v for v, q in enumerate(load) if q > inst.capacity]
        feasible = not (unassigned or duplicated or overloaded)
        return {
            'feasible': feasible,
            'clusters': clusters if feasible else None,
            'unassigned': unassigned,
            'multiply_assigned': duplicated,
            'overloaded_vehicles': overloaded,
            'loads': load,
        }

    def route_instances(self, clusters) -> list[ClusterRoute]:
        """One TSP over {depot} + cluster per non-empty cluster; node 0 is the depot."""
        pts = self.instance.points()
        routes = []
        for v, cluster in enumerate(clusters):
            if not cluster:
                continue
            nodes = [0] + [c + 1 for c in cluster]
            routes.append(ClusterRoute(v, tuple(cluster), TspInstance.from_points(pts[nodes])))
        return routes


def encode_cvrp_two_phase(inst: CvrpInstance, lam: float | None = None) -> CvrpEncoding:
    pts = inst.points()
    seeds = dispersion_seeds(inst)
    seed_points = [pts[0] if s is None else pts[s + 1] for s in seeds]
    V, C = inst.vehicles, len(inst.customers)

    linear = [(c * V + v, float(np.linalg.norm(pts[c + 1] - seed_points[v]))) for c in range(C) for v in range(V)]
    model = QuboModel.build(C * V, linear)
    lam = default_penalty_weight(model) if lam is None else lam

    for c in range(C):
        a = np.zeros(model.num_vars)
        a[[c * V + v for v in range(V)]] = 1.0
        model = add_equality_constraint(model, a, 1.0, lam)
    slack = []
    for v in range(V):
        a = np.zeros(model.num_vars)
        for c in range(C):
            a[c * V + v] = inst.customers[c].demand
        model, span = add_inequality_constraint(model, a, inst.capacity, lam)
        slack.append(span)
    logger.info(f"CVRP phase 1: {C} customers, {V} vehicles, {model.num_vars} variables, lambda={lam}")
    return CvrpEncoding(inst, model, tuple(seeds), tuple(slack))


def plan_routes(encoding: CvrpEncoding, x) -> CvrpPlan:
    """Phase 2 for a feasible clustering: oracle-optimal tour per vehicle from the depot."""
    decoded = encoding.decode_clusters(x)
    if not decoded['feasible']:
        raise DomainError(f"clustering is infeasible: {decoded}")
    routes, total = [], 0.0
    for route in encoding.route_instances(decoded['clusters']):
        tour, length = best_tour(route.instance)
        routes.append(tuple(route.customers[node - 1] for node in tour[1:]))
        total += length
    return CvrpPlan(tuple(tuple(c) for c in decoded['clusters']), tuple(routes), total)


# ----------------------------------------------------------------------
# Resource accounting
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ResourceReport:
    num_variables: int
    num_quadratic_nonzero: int
    max_degree: int
    density: float

    def to_dict(self) -> dict:
        return {
            'num_vars': self.num_variables,
            'nnz': self.num_quadratic_nonzero,
            'max_degree': self.max_degree,
            'density': self.density,
        }


def resource_report(model: Union[QuboModel, PseudoBooleanPolynomial, IsingModel]) -> ResourceReport:
    n = model.num_vars
    if isinstance(model, PseudoBooleanPolynomial):
        nnz = sum(1 for key in model.terms if len(key) == 2)
        degree = model.degree
    elif isinstance(model, IsingModel):
        nnz = len(model.coupling)
        degree = 2 if nnz else int(bool(model.field))
    else:
        nnz = len(model.quadratic)
        degree = 2 if nnz else int(bool(model.linear))
    pairs = n * (n - 1) // 2
    return ResourceReport(n, nnz, degree, nnz / pairs if pairs else 0.0)
