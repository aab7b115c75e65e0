"""
Exceptions raised by the solver and the harness.
"""


class TransportError(Exception):
    """Base class of every error raised by rmtransport."""


class ConfigurationError(TransportError, ValueError):
    """Invalid problem data, configuration value or unsupported setup."""


class SingularSystemError(TransportError):
    """
    A local linear system could not be solved.

    Parameters
    ----------
    message : str
        Human readable description.
    cell : int
        Index of the cell (or pivot block) where the failure happened.
    direction : int, optional
        Index of the discrete direction, for transport sweeps.
    coefficients : tuple of float, optional
        The previous-slope coefficients in effect when the sweep failed.
    """

    def __init__(self, message, cell, direction=None, coefficients=None):
        super().__init__(message)
        self.cell = cell
        self.direction = direction
        self.coefficients = coefficients


class NonConvergenceError(TransportError):
    """
    The two-level iteration did not converge within the allowed number of iterations.

    Parameters
    ----------
    message : str
        Human readable description.
    step_index : int
        Time step that failed.
    history : list of float
        Difference norms recorded before giving up.
    """

    def __init__(self, message, step_index, history):
        super().__init__(message)
        self.step_index = step_index
        self.history = list(history)
