"""Exception hierarchy shared by every module."""


class BrArError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(BrArError, ValueError):
    """Invalid model, distribution, kernel or test parameter."""


class QuadratureError(BrArError, ArithmeticError):
    """Adaptive quadrature failed to reach its tolerance."""


class RetryableError(BrArError):
    """A numerical failure that may disappear with a fresh random stream."""


class SimulationOverflow(RetryableError):
    """A trajectory left the finite-representation guard."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"|X_t| exceeded the overflow guard at t={index} (value {value:.3g})")


class SingularFitError(RetryableError):
    """Least-squares fit is rank deficient or too ill-conditioned."""

    def __init__(self, message: str, condition: float = float("inf")):
        self.condition = condition
        super().__init__(message)


class DegenerateVarianceError(BrArError, ArithmeticError):
    """Asymptotic variance is zero, so the standardized statistic is undefined."""


class InapplicableKernelError(BrArError, ValueError):
    """The kernel lacks a property required by the requested procedure."""


class RetryLimitExceeded(BrArError):
    """A Monte Carlo replication kept failing after every allowed retry."""

    def __init__(self, rep: int, retries: int, last: Exception):
        self.rep = rep
        self.retries = retries
        self.last = last
        super().__init__(f"replication {rep} failed after {retries} retries: {last}")


class CalibrationError(BrArError):
    """No bandwidth constant in the search range reaches the target level."""
