"""Formulate, solve and decode: the stages shared by the CLI and the HTTP API."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Optional

from qtransport.bench import build_solver
from qtransport.encoders import (
    ResourceReport,
    TspInstance,
    best_tour,
    decode_binary,
    decode_one_hot,
    decode_traffic,
    encode_cvrp_two_phase,
    encode_traffic_grid,
    encode_tsp_binary,
    encode_tsp_one_hot,
    local_control_modes,
    plan_routes,
    resource_report,
    tour_length,
    traffic_energy,
)
from qtransport.exceptions import ParameterError
from qtransport.qaoa import QaoaSolver
from qtransport.qubo import ising_to_qubo
from qtransport.utils import parse_document
from qtransport.validators import (
    BinaryLayoutDocument,
    CvrpDocument,
    CvrpLayoutDocument,
    OneHotLayoutDocument,
    QuboDocument,
    SolverConfig,
    TrafficDocument,
    TrafficLayoutDocument,
    TspDocument,
    layout_adapter,
)

logger = logging.getLogger('main_logger')

ENCODINGS = ('one-hot', 'one-hot-fixed', 'binary', 'traffic', 'cvrp')


@dataclass(frozen=True)
class EncodedProblem:
    model: QuboDocument
    layout: dict
    resources: ResourceReport

    def to_dict(self) -> dict:
        return {
            'model': self.model.to_document(),
            'layout': self.layout,
            'resources': self.resources.to_dict(),
        }


def encode_problem(problem: dict, encoding: str, lam: float | None = None) -> EncodedProblem:
    """Problem document -> model document, layout sidecar and resource counts."""
    if encoding in ('one-hot', 'one-hot-fixed'):
        doc = parse_document(TspDocument, problem, "TSP document")
        fixed = encoding == 'one-hot-fixed'
        model, layout = encode_tsp_one_hot(doc.to_instance(), lam, fixed_start=fixed)
        sidecar = OneHotLayoutDocument(num_cities=layout.num_cities, fixed_start=fixed, distance=doc.distance)
    elif encoding == 'binary':
        doc = parse_document(TspDocument, problem, "TSP document")
        model, layout = encode_tsp_binary(doc.to_instance(), lam)
        sidecar = BinaryLayoutDocument(num_cities=layout.num_cities, distance=doc.distance)
    elif encoding == 'traffic':
        doc = parse_document(TrafficDocument, problem, "traffic document")
        model = ising_to_qubo(encode_traffic_grid(doc.to_grid()))
        sidecar = TrafficLayoutDocument(problem=doc)
    elif encoding == 'cvrp':
        doc = parse_document(CvrpDocument, problem, "CVRP document")
        model = encode_cvrp_two_phase(doc.to_instance(), lam).qubo
        sidecar = CvrpLayoutDocument(problem=doc, lam=lam)
    else:
        raise ParameterError(f"unknown encoding {encoding!r}; choose from {', '.join(ENCODINGS)}")

    report = resource_report(model)
    logger.info(f"Encoded {encoding}: {report.num_variables} variables, {report.num_quadratic_nonzero} couplings")
    return EncodedProblem(QuboDocument.from_model(model), sidecar.model_dump(by_alias=True), report)


def _tour_summary(decoding, distance) -> dict:
    summary = decoding.to_dict()
    if decoding.feasible and distance is not None:
        summary['length'] = tour_length(TspInstance(distance), decoding.tour)
    return summary


def tour_optimum(layout: dict) -> Optional[float]:
    """Shortest tour length for a TSP layout that carries its distances, else None.

    At the default penalty weight every feasible assignment scores its tour
    length and nothing infeasible scores lower, so this is the model optimum.
    """
    layout = parse_document(layout_adapter, layout, "layout document")
    if not isinstance(layout, (OneHotLayoutDocument, BinaryLayoutDocument)) or layout.distance is None:
        return None
    _, length = best_tour(TspInstance(layout.distance))
    logger.info(f"Tour oracle optimum for N={layout.num_cities}: {length}")
    return length


def decode_assignment(layout, bits) -> dict:
    """Interpret a solver assignment through its layout sidecar."""
    layout = parse_document(layout_adapter, layout, "layout document")
    if isinstance(layout, (OneHotLayoutDocument, BinaryLayoutDocument)):
        decode = decode_one_hot if layout.kind == 'tsp-one-hot' else decode_binary
        return {'kind': layout.kind, **_tour_summary(decode(bits, layout.to_layout()), layout.distance)}
    if isinstance(layout, TrafficLayoutDocument):
        spins = [1 - 2 * int(b) for b in bits]
        grid = layout.problem.to_grid()
        baseline = local_control_modes(grid)
        return {
            'kind': layout.kind,
            'spins': spins,
            'modes': decode_traffic(spins, grid),
            'energy': traffic_energy(grid, spins),
            'local_control': {'modes': decode_traffic(baseline, grid), 'energy': traffic_energy(grid, baseline)},
        }
    encoding = encode_cvrp_two_phase(layout.problem.to_instance(), layout.lam)
    summary = {'kind': layout.kind, **encoding.decode_clusters(bits)}
    if summary['feasible']:
        plan = plan_routes(encoding, bits)
        summary['routes'] = [list(r) for r in plan.routes]
        summary['total_cost'] = plan.total_cost
    return summary


def solve_model(model: QuboDocument, config: SolverConfig, seed: int, layout: Optional[dict] = None) -> dict:
    """Run one solver and build the solution document.

    Wall time lives under ``timing`` so the rest of the document is
    reproducible for a fixed seed.
    """
    costfn = model.to_model()
    solver = build_solver(config)
    start = time.perf_counter()
    document = {'solver': solver.describe(costfn), 'seed': seed}
    if isinstance(solver, QaoaSolver):
        run = solver.run(costfn, seed)
        bits, energy = list(run.best_assignment), run.best_energy
        document.update({
            'expectation': run.expectation,
            'params': run.params.to_dict(),
            'trace': list(run.trace),
            'samples': run.counts.to_dict(),
        })
    else:
        result = solver(costfn, seed)
        bits, energy = list(result.best_assignment), result.best_energy
    document['timing'] = {'wall_time': time.perf_counter() - start}
    document.update({'assignment': bits, 'energy': energy})
    if layout is not None:
        document['decoded'] = decode_assignment(layout, bits)
    logger.info(f"Solved {costfn.num_vars}-variable model with {solver.name}: energy {energy}")
    return document
