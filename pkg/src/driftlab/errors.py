"""Exceptions raised by driftlab."""

import numpy as np


class DriftLabError(Exception):
    """Base class for all driftlab errors."""


class ConfigurationError(DriftLabError, ValueError):
    """An input violates the precondition of an operation."""


class EmptyInputError(DriftLabError, ValueError):
    """An estimator received nothing to estimate from."""


class SingularSystemError(DriftLabError, np.linalg.LinAlgError):
    """A hitting-time system could not be solved to the required residual."""
