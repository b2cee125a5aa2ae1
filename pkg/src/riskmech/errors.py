"""Exception types raised across the package."""


class RiskMechError(Exception):
    """Base class for every error raised by riskmech."""


class DomainError(RiskMechError, ValueError):
    """A probability or price argument lies outside its domain."""


class NoSolutionError(RiskMechError, ValueError):
    """An inversion target is outside the range of the function."""


class DivergenceError(RiskMechError, ArithmeticError):
    """A tail integral does not converge within tolerance."""


class InvalidSubgradientError(RiskMechError, ValueError):
    """An envelope slope exceeded 1, which no menu utility curve can produce."""


class DegenerateError(RiskMechError, ValueError):
    """The input has no non-trivial solution (zero allocation, U(0)=0, ...)."""


class HypothesisViolationError(RiskMechError, ValueError):
    """A construction was asked for outside the regime where it is valid."""


class PreconditionError(RiskMechError, ValueError):
    """A structural precondition (family ordering, monotone allocation) failed."""


class InfeasibleError(RiskMechError, ValueError):
    """An equation has no solution in the admissible range."""


class OutOfRangeError(RiskMechError, ValueError):
    """An argument is outside the attained range of the function being inverted."""


class StiffnessError(RiskMechError, ArithmeticError):
    """ODE step control underflowed."""


class UnsupportedMechanismError(RiskMechError, ValueError):
    """A second-stage mechanism kind other than posted price or giveaway."""


class ConfigError(RiskMechError, ValueError):
    """An experiment configuration could not be parsed or resolved."""


class BudgetExceededError(RiskMechError, RuntimeError):
    """The oracle ran out of time; ``best`` carries the best result found so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
