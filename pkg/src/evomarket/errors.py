"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a relation is defined."""


class ParameterError(ValueError):
    """A parameter record violates its invariants."""


class ConsistencyError(RuntimeError):
    """Cross-references between state records are broken."""


class DegenerateInputError(ValueError):
    """Input data carry no usable variation (constant, all-zero, ...)."""


class InsufficientDataError(ValueError):
    """Too few samples for the requested estimate."""


class IntegrationError(RuntimeError):
    """A simulation step produced an invalid state or violated its step-size bound."""


class ConfigError(ValueError):
    """A scenario file failed to parse or validate.

    ``field`` names the offending key path (dotted), ``line``/``col`` point into
    the source file when known.
    """

    def __init__(self, message, field=None, line=None, col=None):
        self.field = field
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}, column {col})" if col is not None else f" (line {line})"
        super().__init__(f"{message}{where}")
