"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(ArithmeticError):
    """A series or refinement loop could not reach the requested accuracy."""


class RegimeError(DomainError):
    """The exact sampler was asked for a time below its stable floor.

    Pass ``approx=True`` to use the Gaussian approximation instead, or
    ``exact_floor=0`` to force the exact path anyway.
    """
