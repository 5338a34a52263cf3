"""Exception hierarchy shared by every module of the package."""

import numpy as np


class PDContractError(Exception):
    """Base class for all errors raised by pdcontract."""


class SymmetryError(PDContractError, ValueError):
    pass


class DefinitenessError(PDContractError, ValueError):
    pass


class SingularMatrixError(PDContractError, ValueError):
    pass


class DimensionError(PDContractError, ValueError):
    pass


class ConvergenceError(PDContractError, RuntimeError):
    pass


class ConnectivityError(PDContractError, ValueError):
    pass


class AssumptionViolation(PDContractError, ValueError):
    """A standing assumption of the analysis does not hold.

    ``assumption`` carries the short label of the violated hypothesis,
    e.g. ``"A2"``, so that front ends can report it verbatim.
    """

    def __init__(self, assumption, message):
        super().__init__(f"assumption ({assumption}) violated: {message}")
        self.assumption = assumption


class DivergenceError(PDContractError, RuntimeError):
    """Integration aborted by the blow-up guard.

    The partial trajectory up to the last finite state is kept on the
    exception so callers can still write out what was computed.
    """

    def __init__(self, message, times=None, states=None):
        super().__init__(message)
        self.times = np.asarray(times) if times is not None else None
        self.states = np.asarray(states) if states is not None else None

    @property
    def last_state(self):
        if self.states is None or len(self.states) == 0:
            return None
        return self.states[-1]
