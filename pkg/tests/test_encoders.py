import itertools
import math

import numpy as np
import pytest

from qtransport.encoders import (
    BinaryLayout,
    CvrpInstance,
    Customer,
    OneHotLayout,
    TrafficGrid,
    TspInstance,
    best_tour,
    decode_binary,
    decode_one_hot,
    decode_traffic,
    dispersion_seeds,
    encode_cvrp_two_phase,
    encode_traffic_grid,
    encode_tsp_binary,
    encode_tsp_one_hot,
    local_control_modes,
    plan_routes,
    random_tsp,
    resource_report,
    tour_length,
    traffic_energy,
    tsp_one_hot_objective,
)
from qtransport.exceptions import DimensionError, DomainError, ParameterError
from qtransport.qubo import PseudoBooleanPolynomial, QuboModel, basis_bits, brute_force_min


def unit_tsp(n):
    return TspInstance(np.ones((n, n)) - np.eye(n))


def asymmetric_tsp(n, seed):
    d = np.random.default_rng(seed).uniform(1.0, 10.0, size=(n, n))
    np.fill_diagonal(d, 0.0)
    return TspInstance(d)


# ----------------------------------------------------------------------
# TSP instances and tours
# ----------------------------------------------------------------------

def test_tsp_instance_validation():
    with pytest.raises(DimensionError):
        TspInstance(np.zeros((2, 3)))
    with pytest.raises(DomainError):
        TspInstance([[0, -1], [1, 0]])
    with pytest.raises(DomainError):
        TspInstance([[1, 1], [1, 0]])


def test_tour_length_examples():
    inst = TspInstance.from_points([(0, 0), (3, 0), (0, 4)])
    lengths = {tour_length(inst, tour) for tour in itertools.permutations(range(3))}
    assert len(lengths) == 1
    assert lengths.pop() == pytest.approx(12.0)
    assert tour_length(unit_tsp(5), [4, 2, 0, 1, 3]) == 5.0
    with pytest.raises(DomainError):
        tour_length(unit_tsp(3), [0, 0, 1])


def test_best_tour_pins_city_zero():
    tour, length = best_tour(asymmetric_tsp(5, 3))
    assert tour[0] == 0
    assert sorted(tour) == list(range(5))
    assert length == min(tour_length(asymmetric_tsp(5, 3), [0, *rest]) for rest in itertools.permutations(range(1, 5)))


# ----------------------------------------------------------------------
# One-hot encoding
# ----------------------------------------------------------------------

def test_one_hot_variable_counts():
    assert encode_tsp_one_hot(unit_tsp(3))[0].num_vars == 9
    assert encode_tsp_one_hot(unit_tsp(4), fixed_start=True)[0].num_vars == 9
    for n in (4, 8, 16):
        assert OneHotLayout(n).num_vars == n * n
    with pytest.raises(ParameterError):
        encode_tsp_one_hot(TspInstance([[0.0]]))


def test_one_hot_layout_is_a_bijection():
    for layout in (OneHotLayout(4), OneHotLayout(4, fixed_start=True)):
        indices = [layout.index(i, p) for i in range(4) for p in range(4) if not layout.is_pinned(i, p)]
        assert sorted(indices) == list(range(layout.num_vars))


def test_unit_distance_one_hot_minimum_is_a_tour():
    model, layout = encode_tsp_one_hot(unit_tsp(4))
    bits, energy = brute_force_min(model)
    decoded = decode_one_hot(bits, layout)
    assert decoded.feasible
    assert tour_length(unit_tsp(4), decoded.tour) == 4.0
    assert energy == pytest.approx(4.0)


def test_one_hot_minimum_matches_permutation_oracle():
    inst = asymmetric_tsp(4, 11)
    model, layout = encode_tsp_one_hot(inst)
    bits, energy = brute_force_min(model)
    decoded = decode_one_hot(bits, layout)
    _, optimum = best_tour(inst)
    assert decoded.feasible
    assert tour_length(inst, decoded.tour) == pytest.approx(optimum)
    assert energy == pytest.approx(optimum)


def test_fixed_start_minimum_matches_permutation_oracle():
    inst = asymmetric_tsp(5, 4)
    model, layout = encode_tsp_one_hot(inst, fixed_start=True)
    bits, energy = brute_force_min(model)
    decoded = decode_one_hot(bits, layout)
    assert decoded.tour[0] == 0
    assert energy == pytest.approx(best_tour(inst)[1])


def test_one_hot_penalty_vanishes_exactly_on_tours():
    inst = asymmetric_tsp(3, 5)
    model, layout = encode_tsp_one_hot(inst, lam=7.0)
    objective, _ = tsp_one_hot_objective(inst)
    X = basis_bits(np.arange(1 << 9, dtype=np.int64), 9)
    penalty = model.evaluate_batch(X) - objective.evaluate_batch(X)
    for x, pen in zip(X, penalty):
        assert (abs(pen) < 1e-9) == decode_one_hot(x, layout).feasible


def test_permutation_assignments_carry_no_penalty():
    inst = asymmetric_tsp(4, 6)
    model, layout = encode_tsp_one_hot(inst)
    for tour in itertools.permutations(range(4)):
        assert model.evaluate(layout.encode(tour)) == pytest.approx(tour_length(inst, tour))


def test_decode_one_hot_examples():
    layout = OneHotLayout(3)
    identity = [int(i == p) for i in range(3) for p in range(3)]
    assert decode_one_hot(identity, layout).tour == [0, 1, 2]

    empty = decode_one_hot([0] * 9, layout)
    assert not empty.feasible
    assert empty.violated_positions == (0, 1, 2)
    assert empty.positions == (None, None, None)

    doubled = list(identity)
    doubled[layout.index(1, 0)] = 1
    decoded = decode_one_hot(doubled, layout)
    assert not decoded.feasible
    assert decoded.violated_positions == (0,)
    assert decoded.violated_cities == (1,)


def test_one_hot_objective_term_count():
    for n in (3, 4, 5):
        objective, _ = tsp_one_hot_objective(asymmetric_tsp(n, n))
        assert len(objective.quadratic) == n * n * (n - 1)
        assert resource_report(objective).num_quadratic_nonzero <= n ** 3


def test_two_city_objective_merges_both_directions():
    inst = asymmetric_tsp(2, 0)
    objective, layout = tsp_one_hot_objective(inst)
    assert len(objective.quadratic) == 2
    tour = [0] * layout.num_vars
    tour[layout.index(0, 0)] = tour[layout.index(1, 1)] = 1
    assert objective.evaluate(tour) == pytest.approx(inst.distance[0, 1] + inst.distance[1, 0])


# ----------------------------------------------------------------------
# Binary encoding
# ----------------------------------------------------------------------

def test_binary_variable_counts():
    assert encode_tsp_binary(unit_tsp(4))[1].num_vars == 8
    for n, expected in ((4, 8), (8, 24), (16, 64)):
        assert BinaryLayout(n).num_vars == expected


def test_binary_degree_bound():
    for n in (3, 4, 5):
        poly, layout = encode_tsp_binary(asymmetric_tsp(n, n))
        assert poly.degree <= 2 * layout.ell


@pytest.mark.parametrize("n", [3, 4, 5])
def test_encodings_agree_on_every_tour(n):
    inst = asymmetric_tsp(n, 20 + n)
    poly, binary = encode_tsp_binary(inst)
    objective, one_hot = tsp_one_hot_objective(inst)
    for tour in itertools.permutations(range(n)):
        length = tour_length(inst, tour)
        assert poly.evaluate(binary.encode(tour)) == pytest.approx(length, abs=1e-9)
        assert objective.evaluate(one_hot.encode(tour)) == pytest.approx(length, abs=1e-9)


def test_binary_minimum_is_the_optimal_tour():
    inst = asymmetric_tsp(4, 8)
    poly, layout = encode_tsp_binary(inst)
    bits, energy = brute_force_min(poly)
    decoded = decode_binary(bits, layout)
    assert decoded.feasible
    assert energy == pytest.approx(best_tour(inst)[1])


def test_binary_penalizes_invalid_codes():
    inst = unit_tsp(3)
    poly, layout = encode_tsp_binary(inst)
    x = layout.encode([0, 1, 2])
    x[layout.index(2, 0)] = x[layout.index(2, 1)] = 1
    assert poly.evaluate(x) >= 1.0 + 3 * 1.0


def test_decode_binary_examples():
    layout = BinaryLayout(10)
    assert layout.ell == 4
    x = [0] * layout.num_vars
    for k, bit in enumerate([0, 1, 1, 0]):
        x[layout.index(3, k)] = bit
    assert decode_binary(x, layout).positions[3] == 6

    zeros = decode_binary([0] * 8, BinaryLayout(4))
    assert not zeros.feasible
    assert zeros.violated_cities == (0,)

    small = BinaryLayout(3)
    bits = small.encode([0, 1, 2])
    bits[small.index(1, 0)] = bits[small.index(1, 1)] = 1
    decoded = decode_binary(bits, small)
    assert decoded.violated_positions == (1,)
    assert decoded.positions[1] is None


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_layouts_round_trip_every_tour(n):
    for tour in itertools.permutations(range(n)):
        assert decode_binary(BinaryLayout(n).encode(tour), BinaryLayout(n)).tour == list(tour)
        assert decode_one_hot(OneHotLayout(n).encode(tour), OneHotLayout(n)).tour == list(tour)


def test_fixed_start_layout_rotates_tours():
    layout = OneHotLayout(4, fixed_start=True)
    assert decode_one_hot(layout.encode([2, 0, 3, 1]), layout).tour == [0, 3, 1, 2]


# ----------------------------------------------------------------------
# Traffic signals
# ----------------------------------------------------------------------

def all_spins(n):
    return [list(s) for s in itertools.product([1, -1], repeat=n)]


def test_balanced_queues_give_a_degenerate_model():
    grid = TrafficGrid(2, 2, [3, 3, 3, 3], [3, 3, 3, 3])
    ising = encode_traffic_grid(grid)
    assert ising.field == {}
    assert ising.coupling == {}
    assert {ising.evaluate(s) for s in all_spins(4)} == {0.0}


def test_single_intersection_serves_longer_queue():
    grid = TrafficGrid(1, 1, [5], [1])
    ising = encode_traffic_grid(grid)
    assert min(all_spins(1), key=ising.evaluate) == [-1]
    assert local_control_modes(grid) == [-1]
    assert decode_traffic([-1], grid) == [['NS']]


def test_green_wave_grid_has_two_aligned_ground_states():
    grid = TrafficGrid(2, 2, [0] * 4, [0] * 4, green_wave_weight=1.0)
    ising = encode_traffic_grid(grid)
    energies = {tuple(s): ising.evaluate(s) for s in all_spins(4)}
    ground = min(energies.values())
    assert sorted(s for s, e in energies.items() if e == ground) == [(-1, -1, -1, -1), (1, 1, 1, 1)]


def test_traffic_relabeling_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(50):
        rows, cols = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        size = rows * cols
        q_ns, q_ew = rng.uniform(0, 10, size), rng.uniform(0, 10, size)
        prev = rng.choice([-1, 0, 1], size)
        weights = rng.uniform(0, 2, 3)
        grid = TrafficGrid(rows, cols, q_ns, q_ew, prev, *weights)
        mirror = TrafficGrid(rows, cols, q_ew, q_ns, -prev, *weights)
        spins = rng.choice([-1, 1], size)
        assert abs(traffic_energy(grid, spins) - traffic_energy(mirror, -spins)) <= 1e-12


def test_switching_penalty_favours_previous_mode():
    grid = TrafficGrid(1, 2, [2, 2], [2, 2], prev=[1, -1], switch_weight=1.0)
    ising = encode_traffic_grid(grid)
    assert min(all_spins(2), key=ising.evaluate) == [1, -1]
    assert local_control_modes(grid) == [1, -1]


def test_traffic_grid_validation():
    with pytest.raises(DomainError):
        TrafficGrid(1, 1, [-1], [0])
    with pytest.raises(DimensionError):
        TrafficGrid(1, 2, [1], [1, 1])
    with pytest.raises(ParameterError):
        TrafficGrid(1, 1, [1], [1], green_wave_weight=-1.0)


# ----------------------------------------------------------------------
# CVRP
# ----------------------------------------------------------------------

def exhaustive_cvrp(inst):
    best = math.inf
    customers = range(len(inst.customers))
    for owner in itertools.product(range(inst.vehicles), repeat=len(inst.customers)):
        clusters = [[c for c in customers if owner[c] == v] for v in range(inst.vehicles)]
        if any(sum(inst.customers[c].demand for c in cl) > inst.capacity for cl in clusters):
            continue
        pts = inst.points()
        cost = sum(best_tour(TspInstance.from_points(pts[[0] + [c + 1 for c in cl]]))[1] for cl in clusters if cl)
        best = min(best, cost)
    return best


def test_cvrp_instance_validation():
    with pytest.raises(ParameterError):
        CvrpInstance((0, 0), [Customer(1, 0, 3)], capacity=2, vehicles=1)
    with pytest.raises(ParameterError):
        CvrpInstance((0, 0), [Customer(1, 0, 0)], capacity=2, vehicles=1)


def test_single_vehicle_takes_everything():
    inst = CvrpInstance((0, 0), [Customer(1, 0, 1), Customer(0, 1, 1), Customer(-1, 0, 1)], capacity=3, vehicles=1)
    encoding = encode_cvrp_two_phase(inst)
    bits, _ = brute_force_min(encoding.qubo)
    decoded = encoding.decode_clusters(bits)
    assert decoded['feasible']
    assert decoded['clusters'] == [[0, 1, 2]]
    routes = encoding.route_instances(decoded['clusters'])
    assert len(routes) == 1
    assert routes[0].instance.num_cities == 4


def test_far_apart_pairs_are_split_by_proximity():
    customers = [Customer(10, 0, 1), Customer(11, 0, 1), Customer(-10, 0, 1), Customer(-11, 0, 1)]
    inst = CvrpInstance((0, 0), customers, capacity=2, vehicles=2)
    encoding = encode_cvrp_two_phase(inst)
    bits, _ = brute_force_min(encoding.qubo)
    decoded = encoding.decode_clusters(bits)
    assert decoded['feasible']
    assert {frozenset(c) for c in decoded['clusters']} == {frozenset({0, 1}), frozenset({2, 3})}


def test_dispersion_seeds_pad_extra_vehicles():
    inst = CvrpInstance((0, 0), [Customer(1, 0, 1), Customer(5, 0, 1)], capacity=1, vehicles=3)
    assert dispersion_seeds(inst) == [1, 0, None]


def test_two_phase_cost_is_bounded_by_exhaustive_optimum():
    rng = np.random.default_rng(21)
    customers = [Customer(float(x), float(y), 1) for x, y in rng.uniform(-5, 5, size=(5, 2))]
    inst = CvrpInstance((0.0, 0.0), customers, capacity=3, vehicles=2)
    encoding = encode_cvrp_two_phase(inst)
    bits, _ = brute_force_min(encoding.qubo)
    plan = plan_routes(encoding, bits)
    assert sorted(c for cl in plan.clusters for c in cl) == list(range(5))
    assert plan.total_cost >= exhaustive_cvrp(inst) - 1e-9


def test_plan_routes_rejects_infeasible_clustering():
    inst = CvrpInstance((0, 0), [Customer(1, 0, 1), Customer(2, 0, 1)], capacity=2, vehicles=1)
    encoding = encode_cvrp_two_phase(inst)
    with pytest.raises(DomainError):
        plan_routes(encoding, [0] * encoding.qubo.num_vars)


# ----------------------------------------------------------------------
# Resource accounting
# ----------------------------------------------------------------------

def test_resource_report_of_empty_models():
    report = resource_report(QuboModel(0))
    assert (report.num_variables, report.num_quadratic_nonzero, report.max_degree, report.density) == (0, 0, 0, 0.0)
    assert resource_report(PseudoBooleanPolynomial(0)).to_dict() == {'num_vars': 0, 'nnz': 0, 'max_degree': 0, 'density': 0.0}


def test_resource_report_counts_polynomial_terms():
    poly = PseudoBooleanPolynomial.build(4, {(0, 1): 1.0, (1, 2): 2.0, (0, 1, 3): 1.0, (2,): 5.0})
    report = resource_report(poly)
    assert report.num_quadratic_nonzero == 2
    assert report.max_degree == 3
    assert report.density == pytest.approx(2 / 6)


def test_resource_report_for_tsp_encodings():
    for n in (4, 8):
        assert resource_report(encode_tsp_one_hot(random_tsp(n, 0))[0]).num_variables == n * n
        poly, layout = encode_tsp_binary(random_tsp(n, 0))
        assert resource_report(poly).num_variables == n * layout.ell
