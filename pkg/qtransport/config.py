import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    # Exhaustive enumeration and statevector simulation are both O(2^n)
    BRUTE_FORCE_CAP = int(os.getenv('QT_BRUTE_FORCE_CAP', '24'))
    STATEVECTOR_CAP = int(os.getenv('QT_STATEVECTOR_CAP', '24'))

    DEFAULT_SEED = int(os.getenv('QT_DEFAULT_SEED', '0'))
    SUCCESS_TOL = float(os.getenv('QT_SUCCESS_TOL', '1e-9'))

    ANNEAL_SWEEPS = int(os.getenv('QT_ANNEAL_SWEEPS', '1000'))

    QAOA_RESTARTS = int(os.getenv('QT_QAOA_RESTARTS', '10'))
    QAOA_MAX_ITERS = int(os.getenv('QT_QAOA_MAX_ITERS', '500'))
    QAOA_TOL = float(os.getenv('QT_QAOA_TOL', '1e-6'))
    QAOA_SHOTS = int(os.getenv('QT_QAOA_SHOTS', '1024'))

    LOG_DIR = os.getenv('QT_LOG_DIR', 'logs')
    LOG_LEVEL = os.getenv('QT_LOG_LEVEL', 'INFO').upper()
    FLASK_DEBUG = os.getenv('FLASK_DEBUG', 'False').lower() == 'true'
