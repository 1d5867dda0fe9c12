"""Exception hierarchy shared by all disclab modules."""


class DisclabError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(DisclabError, ValueError):
    """Invalid body, point set or run configuration."""


class UnsupportedBodyError(DisclabError):
    """The operation needs a property (smoothness, positive curvature) the body lacks."""


class UnsupportedQueryError(DisclabError):
    """No closed form exists for the requested (body, direction) pair."""


class DomainError(DisclabError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class AccuracyError(DisclabError, ArithmeticError):
    """A refinement loop ran out of budget before meeting its tolerance.

    ``iterates`` holds the last two values so callers can inspect how far
    apart they were.
    """

    def __init__(self, message, iterates=()):
        super().__init__(message)
        self.iterates = tuple(iterates)
