"""Error types shared by the library, the CLI and the HTTP layer.

Each error carries the process exit code the CLI reports for it:
0 success, 2 input error, 3 resource cap, 4 undefined result.
"""


class QTransportError(Exception):
    exit_code = 1
    http_status = 500


class InputError(QTransportError, ValueError):
    """Malformed or invalid input document."""

    exit_code = 2
    http_status = 422

    def __init__(self, message, problems=None):
        super().__init__(message)
        self.problems = list(problems or [])

    def __str__(self):
        if not self.problems:
            return self.args[0]
        return self.args[0] + '\n' + '\n'.join(f'  {p}' for p in self.problems)


class DimensionError(InputError):
    """Assignment or state length does not match the model."""


class ParameterError(InputError):
    """Invalid parameter value or infeasible instance."""


class DomainError(InputError):
    """A value lies outside its domain (non ±1 spin, non-permutation tour)."""


class ResourceCapError(QTransportError):
    exit_code = 3
    http_status = 413


class UndefinedResultError(QTransportError):
    exit_code = 4
    http_status = 409
