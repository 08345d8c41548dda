"""Exception hierarchy shared by every radcomp module."""


class RadcompError(Exception):
    """Base class for all errors raised by radcomp."""


class InvalidInputError(RadcompError, ValueError):
    """An argument violates a documented domain or shape constraint."""


class WindowError(RadcompError):
    """A shell or estimate window contains no grid nodes."""


class PreconditionError(RadcompError):
    """A growth-estimate window violates the conditions of its estimate."""


class NotAdmissibleError(RadcompError):
    """A manufactured profile does not produce a non-negative source."""


class ComparisonFailure(RadcompError):
    """The comparison function blew up while the sphere maximum stayed finite."""


class CalibrationUndefined(RadcompError):
    """Every sampled right-hand side vanished, so no ratio is available."""


class ConfigError(RadcompError):
    """A scenario configuration file could not be parsed."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
