"""Exception types raised by the package.

All of them derive from ``ValueError`` so callers that only care about bad
input can catch that.
"""


class GeometryError(ValueError):
    """Bad grid parameters, points outside the simplex, stencils that fall off it."""


class SpecError(ValueError):
    """Unknown fixture, invalid game parameters, or an operation the spec kind cannot support."""


class DomainError(ValueError):
    """A closed form or diagnostic was requested outside the region where it is defined."""


class KernelError(ValueError):
    """Malformed martingale kernels or sampling requests."""


class ConfigError(ValueError):
    """Configuration parse or validation failure.

    ``field`` names the offending key when there is one; ``line`` and
    ``column`` are 1-based positions for syntax errors.
    """

    def __init__(self, message, field=None, line=None, column=None):
        super().__init__(message)
        self.field = field
        self.line = line
        self.column = column

    def __str__(self):
        msg = super().__str__()
        if self.line is not None:
            msg = f"line {self.line}, column {self.column}: {msg}"
        if self.field is not None:
            msg = f"[{self.field}] {msg}"
        return msg
