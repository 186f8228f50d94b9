import math

import pytest

from qtransport import bench
from qtransport.bench import TtsReport, compute_tts, run_tts_experiment, scaling_sweep, wilson_interval
from qtransport.config import Config
from qtransport.encoders import best_tour, encode_tsp_one_hot, random_tsp
from qtransport.exceptions import ParameterError, ResourceCapError, UndefinedResultError
from qtransport.utils import read_csv, read_json
from qtransport.validators import ExperimentSpec, QuboDocument


def experiment(model, solver='brute', runs=5, seed=0, **extra):
    return ExperimentSpec(model=QuboDocument.from_model(model), solver={'name': solver, **extra}, runs=runs, seed=seed)


# ----------------------------------------------------------------------
# Time to solution
# ----------------------------------------------------------------------

def test_tts_examples():
    assert compute_tts(1.0, 1.0) == 1.0
    assert compute_tts(1.0, 0.99) == pytest.approx(1.0)
    assert compute_tts(1.0, 0.5) == pytest.approx(math.log(0.01) / math.log(0.5))
    assert compute_tts(2.0, 0.5) == pytest.approx(2 * 6.643856, rel=1e-6)


def test_tts_errors():
    with pytest.raises(UndefinedResultError):
        compute_tts(1.0, 0.0)
    with pytest.raises(ParameterError):
        compute_tts(0.0, 0.5)
    with pytest.raises(ParameterError):
        compute_tts(1.0, 1.5)


def test_tts_falls_as_success_rises():
    values = [compute_tts(1.0, k / 100) for k in range(1, 101)]
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert all(compute_tts(t, 0.3) < compute_tts(t + 0.5, 0.3) for t in (0.5, 1.0, 2.0))


def test_wilson_interval():
    low, high = wilson_interval(5, 10)
    assert low < 0.5 < high
    assert wilson_interval(10, 10)[1] == pytest.approx(1.0)
    assert wilson_interval(0, 10)[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ParameterError):
        wilson_interval(0, 0)


# ----------------------------------------------------------------------
# Experiments
# ----------------------------------------------------------------------

def test_brute_force_experiment_always_succeeds(make_qubo, rng, tmp_path):
    spec = experiment(make_qubo(rng, 5), runs=3)
    spec = spec.model_copy(update={'output': str(tmp_path / 'tts.json')})
    report = run_tts_experiment(spec)
    assert report.success_probability == 1.0
    assert report.tts == report.run_time
    assert report.successes == 3
    assert not report.undefined

    written = read_json(tmp_path / 'tts.json')
    assert written['p'] == 1.0
    assert written['T'] == report.run_time
    assert written['undefined'] is False
    assert written['instance']['num_vars'] == 5


def test_experiment_without_successes_is_undefined(monkeypatch, never_optimal, make_qubo, rng):
    monkeypatch.setattr(bench, 'build_solver', lambda config: never_optimal)
    model = make_qubo(rng, 4)
    report = run_tts_experiment(experiment(model, runs=4))
    if report.optimal_energy == model.evaluate([0] * 4):
        pytest.skip("all-zero assignment happens to be optimal")
    assert report.success_probability == 0.0
    assert report.tts is None
    assert report.undefined
    assert report.to_document()['tts'] is None


def test_annealing_experiment_is_reproducible(make_qubo, rng):
    model = make_qubo(rng, 8)
    a = run_tts_experiment(experiment(model, solver='sa', runs=10, seed=3, sweeps=20))
    b = run_tts_experiment(experiment(model, solver='sa', runs=10, seed=3, sweeps=20))
    assert a.energies == b.energies
    assert a.successes == b.successes
    assert a.solver == {'name': 'sa', 'sweeps': 20, 't0': a.solver['t0'], 't1': a.solver['t1']}


def test_report_accepts_either_field_names():
    report = TtsReport(T=1.0, p=0.5, runs=2, successes=1, tts=6.6, ci95=(0.1, 0.9), seed=0,
                       optimal_energy=-1.0, energies=[-1.0, 0.0], solver={'name': 'sa'})
    same = TtsReport(run_time=1.0, success_probability=0.5, runs=2, successes=1, tts=6.6, ci95=(0.1, 0.9),
                     seed=0, optimal_energy=-1.0, energies=[-1.0, 0.0], solver={'name': 'sa'})
    assert report == same
    assert set(report.to_document()) >= {'T', 'p', 'tts', 'ci95', 'undefined'}


@pytest.mark.slow
def test_annealing_tts_on_five_city_tour():
    inst = random_tsp(5, seed=0)
    model, _ = encode_tsp_one_hot(inst)
    assert model.num_vars > 24
    _, optimum = best_tour(inst)
    spec = experiment(model, solver='sa', runs=200, seed=0, sweeps=1000)
    report = run_tts_experiment(spec.model_copy(update={'optimal_energy': optimum}))
    assert report.optimal_energy == optimum
    assert report.success_probability > 0.5
    assert report.tts is not None
    assert report.tts >= report.run_time
    TtsReport.model_validate(report.to_document())


@pytest.mark.slow
def test_success_does_not_fall_with_more_sweeps():
    inst = random_tsp(5, seed=0)
    model, _ = encode_tsp_one_hot(inst)
    _, optimum = best_tour(inst)
    reports = []
    for sweeps in (10, 100, 1000):
        spec = experiment(model, solver='sa', runs=100, seed=0, sweeps=sweeps)
        reports.append(run_tts_experiment(spec.model_copy(update={'optimal_energy': optimum})))
    for short, long in zip(reports, reports[1:]):
        assert long.ci95[1] >= short.ci95[0]
    assert reports[-1].tts is not None


def test_known_optimum_skips_brute_force(monkeypatch, make_qubo, rng):
    model = make_qubo(rng, 6)
    _, optimum = bench.brute_force_min(model)

    def refuse(costfn):
        raise AssertionError("brute force should not run")

    monkeypatch.setattr(bench, 'brute_force_min', refuse)
    spec = experiment(model, runs=2).model_copy(update={'optimal_energy': optimum})
    report = run_tts_experiment(spec)
    assert report.optimal_energy == optimum
    assert report.success_probability == 1.0


def test_known_optimum_lifts_the_brute_force_cap(monkeypatch):
    monkeypatch.setattr(Config, 'BRUTE_FORCE_CAP', 8)
    inst = random_tsp(4, seed=2)
    model, _ = encode_tsp_one_hot(inst)
    with pytest.raises(ResourceCapError):
        run_tts_experiment(experiment(model, solver='sa', runs=2, sweeps=50))
    _, optimum = best_tour(inst)
    spec = experiment(model, solver='sa', runs=2, sweeps=50).model_copy(update={'optimal_energy': optimum})
    assert run_tts_experiment(spec).optimal_energy == optimum


# ----------------------------------------------------------------------
# Scaling sweeps
# ----------------------------------------------------------------------

def test_scaling_sweep_counts(tmp_path):
    out = tmp_path / 'scaling.csv'
    rows = scaling_sweep(['one-hot', 'one-hot-fixed', 'binary', 'traffic'], [4, 8, 16], output=out)
    counts = {(r['encoding'], r['size']): r['num_vars'] for r in rows}
    assert counts[('one-hot', 4)] == 16
    assert counts[('one-hot', 8)] == 64
    assert counts[('one-hot', 16)] == 256
    assert counts[('one-hot-fixed', 4)] == 9
    assert counts[('binary', 4)] == 8
    assert counts[('binary', 8)] == 24
    assert counts[('binary', 16)] == 64
    assert counts[('one-hot-fixed', 16)] == 225
    assert counts[('traffic', 4)] == 16
    assert counts[('traffic', 16)] == 256

    header, body = read_csv(out)
    assert header == list(bench.SWEEP_COLUMNS)
    assert len(body) == 12
    assert body[0][:3] == ['4', 'one-hot', '16']


def test_binary_encoding_needs_fewer_variables():
    rows = scaling_sweep(['one-hot', 'binary'], [4, 6, 8])
    by_size = {}
    for row in rows:
        by_size.setdefault(row['size'], {})[row['encoding']] = row['num_vars']
    assert all(v['binary'] < v['one-hot'] for v in by_size.values())


@pytest.mark.parametrize("encodings, sizes", [([], [4]), (['one-hot'], []), (['one-hot'], [0])])
def test_scaling_sweep_rejects_empty_input(encodings, sizes):
    with pytest.raises(ParameterError):
        scaling_sweep(encodings, sizes)


def test_scaling_sweep_rejects_unknown_encoding():
    with pytest.raises(ParameterError):
        scaling_sweep(['gray-code'], [4])
