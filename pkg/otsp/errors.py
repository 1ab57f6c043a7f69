"""Exception hierarchy shared by every stage of the solver."""


class OtspError(Exception):

    """Base class for all errors raised by otsp."""


class ParameterError(OtspError):

    """A caller passed arguments that violate an operation's preconditions."""


class PreconditionError(OtspError):

    """An intermediate structure handed to a stage has the wrong shape."""


class InfeasibleError(OtspError):

    """A candidate object (tour, LP point, family) fails verification."""


class ParseError(OtspError):

    """A document could not be read.

    :param message: What went wrong
    :type message: str
    :param location: Field path or ``line N`` where the problem was found
    :type location: str | None

    """

    def __init__(self, message, location=None):
        self.message = message
        self.location = location
        if location is not None:
            message = '{} (at {})'.format(message, location)
        super().__init__(message)


class ResourceError(OtspError):

    """A configured cap (iterations, scale, instance size) was exceeded.

    :param message: Which cap was hit
    :type message: str
    :param stats: Partial statistics gathered before giving up
    :type stats: dict | None

    """

    def __init__(self, message, stats=None):
        self.stats = dict(stats or {})
        super().__init__(message)


class ConsistencyError(OtspError):

    """An internal invariant does not hold; indicates a bug, not bad input."""
