"""Exception types shared across the package."""


class GaussMapError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateJet(GaussMapError, ZeroDivisionError):
    pass


class DomainError(GaussMapError, ValueError):
    """A function was evaluated outside its real domain (e.g. sqrt of a negative)."""


class OrderUnderflow(GaussMapError):
    pass


class ParseError(GaussMapError):
    """Syntax error in an expression or surface file, with 1-based location."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class UnknownIdentifier(ParseError):
    pass


class OutOfDomain(GaussMapError, ValueError):
    pass


class NotImmersed(GaussMapError):
    pass


class StereoPole(GaussMapError):
    pass


class GradientVanishes(GaussMapError):
    """Both K +- K^N and its gradient vanish somewhere on the singular set."""


class DegenerateTangency(GaussMapError):
    pass


class InconclusiveSign(GaussMapError):
    pass


class NonConvergent(GaussMapError):
    pass


class NotClosedSurface(GaussMapError):
    pass


class AtCusp(GaussMapError):
    pass


class MeshInconsistent(GaussMapError):
    pass


class GenericityViolation(GaussMapError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
