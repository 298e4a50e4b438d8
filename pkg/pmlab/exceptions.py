# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

__all__ = ['PmlabError', 'ParameterError', 'ConfigError', 'NoSolutionError',
           'ConvergenceError', 'NumericalFailureError', 'PrecisionError',
           'ContractError']


class PmlabError(Exception):
    pass


class ParameterError(PmlabError, ValueError):
    pass


class ConfigError(PmlabError):
    pass


class NoSolutionError(PmlabError):
    """Raised when the ODE system has no solution (lambda >= 4)"""

    def __init__(self, lam: float):
        super().__init__(
            f"lambda={lam} is in the recovery regime (lambda >= 4): the ODE "
            f"system has no solution, the first-moment bound applies instead")
        self.lam = lam

    def __reduce__(self):
        return type(self), (self.lam,)


class ConvergenceError(PmlabError):
    pass


class NumericalFailureError(PmlabError):
    """Raised when the integrator gives up, carries the last state"""

    def __init__(self, message: str, x: float, state):
        super().__init__(f"{message} (x={x}, state={tuple(state)})")
        self.detail = message
        self.x = x
        self.state = tuple(state)

    def __reduce__(self):
        return type(self), (self.detail, self.x, self.state)


class PrecisionError(PmlabError):
    """Raised when the shooting trajectory leaves before the saddle"""

    def __init__(self, message: str, x_reachable: float):
        super().__init__(f"{message} (reachable x_T={x_reachable})")
        self.detail = message
        self.x_reachable = x_reachable

    def __reduce__(self):
        return type(self), (self.detail, self.x_reachable)


class ContractError(PmlabError):
    pass
