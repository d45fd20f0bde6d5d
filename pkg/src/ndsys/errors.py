"""Exception types raised across the package."""


class NDSysError(Exception):
    """Base class for all package errors."""


class ShapeError(NDSysError, ValueError):
    """Operands have incompatible or invalid shapes."""


class DomainError(NDSysError, ValueError):
    """A multi-index or argument lies outside an operation's domain."""


class CapacityError(NDSysError, OverflowError):
    """A size or integer result exceeds the supported range."""


class ConfigurationError(NDSysError, ValueError):
    """Invalid search or grid configuration."""


class PreconditionError(NDSysError, ValueError):
    """A mathematical precondition of an operation does not hold.

    ``detail`` carries machine-readable context (e.g. the failing family
    or a computed safe bound).
    """

    def __init__(self, message, **detail):
        super().__init__(message)
        self.detail = detail


class StructuralError(NDSysError, ValueError):
    """Two systems cannot be compared or combined (dims, D-tuples, splits)."""


class SingularityError(NDSysError, ArithmeticError):
    """A resolvent ``I - zA`` is numerically singular."""

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class GapError(NDSysError, KeyError):
    """A lattice signal lacks a value at a referenced point."""

    def __init__(self, point):
        super().__init__(f"missing signal value at lattice point {tuple(point)}")
        self.point = tuple(point)

    def __str__(self):
        return self.args[0]
