"""Exception hierarchy shared by the numerical and pipeline layers."""


class SemlinkError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SemlinkError, ValueError):
    """An argument lies outside the domain of the function."""


class ParameterError(SemlinkError, ValueError):
    """Parameters are individually valid but jointly degenerate."""


class NumericError(SemlinkError, ArithmeticError):
    """A numerical procedure failed to converge.

    ``diagnostics`` carries whatever the failing routine knew at the time
    (iteration count, last term, residual estimate, ...).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in self.diagnostics.items())
        return f"{base} ({extra})"


class ShapeError(SemlinkError, ValueError):
    """Grid dimensions or box coordinates do not fit together."""


class ConfigError(SemlinkError, ValueError):
    """A configuration or dataset file is malformed."""

    def __init__(self, message, path=None, line=None, field=None):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = ": ".join([", ".join(where)]) + ": " if where else ""
        super().__init__(prefix + message)
