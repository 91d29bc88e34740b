"""Exception hierarchy shared by every igac module."""


class IGACError(Exception):
    """Base class for all igac errors."""


class DomainError(IGACError, ValueError):
    """A point lies outside (or too close to the edge of) a coordinate domain."""


class MetricError(IGACError, ArithmeticError):
    """A metric evaluation produced a non-symmetric or non-positive-definite matrix."""


class SupportError(IGACError, ValueError):
    """A sample value lies outside the support of a distribution family."""


class ConvergenceError(IGACError, ArithmeticError):
    """A quadrature or integrator did not reach its tolerance within budget.

    Attributes:
        achieved: best error estimate reached before giving up, if any.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DegenerateRegionError(IGACError, ValueError):
    """An explored region has zero extent along some coordinate."""

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class ConfigError(IGACError, ValueError):
    """Experiment configuration failed to parse or validate.

    Attributes:
        problems: list of ``(path, message)`` tuples, one per failed check.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("", problems)]
        self.problems = list(problems)
        lines = [f"{p}: {m}" if p else m for p, m in self.problems]
        super().__init__("; ".join(lines))
