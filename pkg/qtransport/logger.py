import logging
import sys
import os

from qtransport.config import Config

FORMAT = '[%(asctime)s] %(levelname)s in %(module)s: %(message)s'


def _reset(logger):
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


def configure_logging(log_dir=None):
    log_dir = log_dir or Config.LOG_DIR
    os.makedirs(log_dir, exist_ok=True)

    formatter = logging.Formatter(FORMAT)

    # Console goes to stderr; stdout is reserved for CLI data
    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)

    # Main logger
    main_logger = logging.getLogger('main_logger')
    _reset(main_logger)
    main_logger.setLevel(getattr(logging, Config.LOG_LEVEL, logging.INFO))
    main_logger.addHandler(stream_handler)
    main_file_handler = logging.FileHandler(os.path.join(log_dir, 'info.log'))
    main_file_handler.setFormatter(formatter)
    main_logger.addHandler(main_file_handler)

    # Error logger
    error_logger = logging.getLogger('error_logger')
    _reset(error_logger)
    error_logger.setLevel(logging.ERROR)
    error_logger.addHandler(stream_handler)
    error_file_handler = logging.FileHandler(os.path.join(log_dir, 'errors.log'))
    error_file_handler.setFormatter(formatter)
    error_logger.addHandler(error_file_handler)
