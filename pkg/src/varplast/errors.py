"""Exception types shared across the package."""

from __future__ import annotations


class ContractError(ValueError):
    """An operation was called with arguments violating its preconditions."""


class DimensionError(ContractError):
    """Vector or matrix dimensions do not agree."""


class UnstableInitialState(ContractError):
    """The initial datum is not stable at t = 0.

    ``distance`` is the Euclidean distance of the initial stress
    ``l(0) - A y0`` from the elastic domain.
    """

    def __init__(self, message: str, distance: float):
        super().__init__(message)
        self.distance = distance


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its optimality certificate."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
