"""Exception hierarchy shared by all quasilie modules."""


class QuasiLieError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(QuasiLieError, ValueError):
    pass


class ParseError(QuasiLieError, ValueError):
    """Syntax error in a coefficient expression; ``pos`` is a 0-based offset."""

    def __init__(self, message, source="", pos=None):
        self.source = source
        self.pos = pos
        if pos is not None:
            message = f"{message} at position {pos}"
            if source:
                message += f"\n  {source}\n  {' ' * pos}^"
        super().__init__(message)


class DomainError(QuasiLieError, ArithmeticError):
    """A coefficient was evaluated outside its domain.

    ``expr`` holds the offending subexpression (as a string).
    """

    def __init__(self, message, expr=None):
        self.expr = expr
        if expr is not None:
            message = f"{message} in '{expr}'"
        super().__init__(message)


class SchemeError(QuasiLieError, ValueError):
    pass


class Diverged(QuasiLieError, ArithmeticError):
    """Finite-time blow-up detected; ``time`` is the estimated blow-up time."""

    def __init__(self, message, time=None, solution=None):
        self.time = time
        self.solution = solution
        super().__init__(message)


class UnsupportedBranch(QuasiLieError, ValueError):
    pass


class InconsistencyError(QuasiLieError, ArithmeticError):
    pass


class ReductionError(QuasiLieError, ArithmeticError):
    """A reduction could not be constructed; ``residual`` carries the evidence."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
