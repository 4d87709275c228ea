"""Exception types shared across the package."""


class PucciLabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(PucciLabError, ValueError):
    """An argument violates a documented precondition."""


class ParseError(PucciLabError):
    """Syntax error in an expression string.

    Attributes:
        offset: byte offset into the UTF-8 encoded input where the error occurred.
        expected: sorted tuple of token descriptions that would have been accepted.
    """

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        detail = f"{message} at byte {offset}"
        if self.expected:
            detail += " (expected: " + ", ".join(self.expected) + ")"
        super().__init__(detail)


class EvalDomainError(PucciLabError):
    """A math function was evaluated outside its domain (log/sqrt/pow).

    Carries the offending sub-expression (formatted) and the argument value.
    """

    def __init__(self, subexpr, value, message=None):
        self.subexpr = subexpr
        self.value = value
        super().__init__(message or f"domain error in '{subexpr}' at argument {value!r}")


class UnboundParameterError(PucciLabError):
    """An expression references a parameter missing from the evaluation context."""

    def __init__(self, name):
        self.name = name
        super().__init__(f"unbound parameter '{name}'")


class TransformOverflowError(PucciLabError):
    """The accumulated exponent G(t) left the floating-point range.

    `threshold_t` is the first t at which the overflow guard tripped.
    """

    def __init__(self, threshold_t, message=None):
        self.threshold_t = threshold_t
        super().__init__(message or f"transform overflow: exp(G) out of range beyond t = {threshold_t:.6g}")


class BracketError(PucciLabError):
    """A bisection bracket does not straddle the sought transition.

    `data` carries the endpoint evaluations that were observed.
    """

    def __init__(self, message, data=None):
        self.data = data
        super().__init__(message)


class ShootFailureError(PucciLabError):
    """The ODE integrator failed to advance; diagnostics attached."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
