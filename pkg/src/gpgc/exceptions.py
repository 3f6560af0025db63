"""Exception types raised across the package."""

import numpy as np


class ShapeError(ValueError):
    """Operands have incompatible shapes."""


class KernelError(ValueError):
    """A kernel could not be evaluated on the given inputs.

    ``node`` is the offending node index when one can be identified.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class FactorizationError(np.linalg.LinAlgError):
    """Cholesky factorization failed even after jitter escalation."""

    def __init__(self, message, jitter):
        super().__init__(message)
        self.jitter = jitter


class FormatError(ValueError):
    """An input file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
