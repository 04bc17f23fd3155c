"""Exception hierarchy shared by every rigor module.

Outcome-style results (range enclosure failure, Newton budget, machine
Undefined) are ordinary return values, not exceptions; only genuine
contract violations raise.
"""


class RigorError(Exception):
    """Base class for all library errors."""


class InvalidEndpoints(RigorError):
    """Interval construction with lo > hi, or a non-finite f64 endpoint."""


class BackendMismatch(RigorError):
    """Binary operation on intervals from different scalar backends."""


class Overflow(RigorError):
    """A directed-rounded f64 endpoint left the finite range."""


class DivisionByZeroInterval(RigorError):
    """Division by an interval containing zero."""


class NotBisectable(RigorError):
    """No representable point lies strictly between the endpoints."""


class DomainError(RigorError):
    """Argument outside a function's domain (log, sqrt, 1/x, ...).

    `node` carries the offending expression node when evaluation raised.
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ParseError(RigorError):
    """Syntax error with position information."""

    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = f"{message} (line {line}, col {col})"
        super().__init__(message)
        self.line = line
        self.col = col


class UnknownIdentifier(ParseError):
    """Call of a function name that is not a builtin."""


class UnboundVariable(RigorError):
    """Expression variable with no binding in the evaluation context."""


class NonDifferentiable(RigorError):
    """differentiate() hit a Step node."""


class SingularDerivative(RigorError):
    """Kantorovich step where the derivative enclosure contains zero."""


class EmptyCovering(RigorError):
    """modulus_estimate on a covering with no nondegenerate piece."""


class VectorUnsupported(RigorError):
    """Expression node with no certified vectorized evaluation."""


class ValidationError(RigorError):
    """Structurally invalid machine program."""
