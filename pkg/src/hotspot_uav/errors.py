"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A parameter record or configuration violates an invariant."""


class ConfigParseError(ValidationError):
    """Malformed configuration text. Carries the offending line/field."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class NumericFailure(ArithmeticError):
    """A series or quadrature failed to converge.

    ``context`` holds whatever identifies the failing evaluation (argument
    tuple, integration interval, sweep grid cell).
    """

    def __init__(self, message, context=None):
        self.context = context
        if context is not None:
            message = f"{message} (context: {context})"
        super().__init__(message)
