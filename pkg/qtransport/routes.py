from flask import Blueprint, jsonify, request
from qtransport.bench import SWEEP_ENCODINGS, run_tts_experiment, scaling_sweep
from qtransport.exceptions import InputError, QTransportError
from qtransport.pipeline import encode_problem, solve_model, tour_optimum
from qtransport.utils import parse_document
from qtransport.validators import EncodeRequest, SolveRequest, TtsRequest
import logging

bp = Blueprint('pipeline', __name__)
logger = logging.getLogger('main_logger')
error_logger = logging.getLogger('error_logger')


def log_and_return_error(message, status_code=400, problems=None):
    error_logger.error(message)
    body = {"code": "error", "message": message}
    if problems:
        body["problems"] = problems
    return jsonify(body), status_code


def _payload(schema, what):
    data = request.get_json(force=True, silent=True)
    if data is None:
        raise InputError("request body is not valid JSON")
    return parse_document(schema, data, what)


@bp.errorhandler(QTransportError)
def handle_pipeline_error(e):
    problems = getattr(e, 'problems', None)
    message = e.args[0] if e.args else type(e).__name__
    return log_and_return_error(message, e.http_status, problems)


@bp.route('/')
def index():
    return jsonify({"code": "success", "service": "qtransport",
                    "endpoints": ["/encode", "/solve", "/tts", "/resources"]})


@bp.route('/encode', methods=['POST'])
def encode():
    logger.info("Encode endpoint called")
    payload = _payload(EncodeRequest, "encode request")
    encoded = encode_problem(payload.problem, payload.encoding, payload.lam)
    return jsonify({"code": "success", **encoded.to_dict()}), 200


@bp.route('/solve', methods=['POST'])
def solve():
    logger.info("Solve endpoint called")
    payload = _payload(SolveRequest, "solve request")
    solution = solve_model(payload.model, payload.solver, payload.seed, payload.layout)
    return jsonify({"code": "success", "solution": solution}), 200


@bp.route('/tts', methods=['POST'])
def tts():
    logger.info("TTS endpoint called")
    payload = _payload(TtsRequest, "experiment spec")
    optimum = payload.optimal_energy
    if optimum is None and payload.layout is not None:
        optimum = tour_optimum(payload.layout)
    # never write server-side files from a request
    spec = payload.model_copy(update={'output': None, 'optimal_energy': optimum})
    report = run_tts_experiment(spec)
    return jsonify({"code": "success", "report": report.to_document()}), 200


@bp.route('/resources')
def resources():
    encodings = request.args.get('encoding', ','.join(SWEEP_ENCODINGS[:1])).split(',')
    try:
        sizes = [int(s) for s in request.args.get('sizes', '4,8').split(',') if s]
        seed = int(request.args.get('seed', '0'))
    except ValueError as e:
        return log_and_return_error(f"Invalid query parameter: {e}", 422)
    rows = scaling_sweep([e.strip() for e in encodings if e.strip()], sizes, seed=seed)
    return jsonify({"code": "success", "rows": rows}), 200
