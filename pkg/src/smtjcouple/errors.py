"""Exception hierarchy shared across the toolkit."""


class SmtjError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(SmtjError, ValueError):
    """An argument is non-finite, out of range or of the wrong shape."""


class InvalidConfigurationError(SmtjError, ValueError):
    """A device, circuit or network configuration violates its invariants."""


class BreakdownError(SmtjError):
    """A drive current reached the tunnel-barrier breakdown limit.

    ``partial_traces`` holds whatever a simulation produced before the
    offending current was reached (each flagged ``valid=False``).
    """

    def __init__(self, message, *, device=None, current=None, partial_traces=None):
        super().__init__(message)
        self.device = device
        self.current = current
        self.partial_traces = partial_traces


class NumericalFailureError(SmtjError, ArithmeticError):
    """A linear-algebra step failed (reducible generator, singular system)."""


class UndefinedCorrelationError(NumericalFailureError):
    """Correlation requested for a series (or marginal) with zero variance."""


class UnsupportedConfigurationError(SmtjError, ValueError):
    """A closed form was requested outside the case it covers."""


class ConfigError(SmtjError, ValueError):
    """Experiment configuration could not be parsed; carries a line number."""

    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
