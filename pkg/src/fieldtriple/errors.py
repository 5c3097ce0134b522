"""Exception hierarchy shared by all modules."""


class FieldTripleError(Exception):
    """Base class for every error raised by the package."""


class DivisionByZero(FieldTripleError, ZeroDivisionError):
    pass


class MissingAssignment(FieldTripleError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class EvalDomain(FieldTripleError, ValueError):
    pass


class NameCollision(FieldTripleError, ValueError):
    pass


class UnknownSymbol(FieldTripleError, ValueError):
    pass


class ChartMismatch(FieldTripleError, ValueError):
    pass


class BaseMismatch(FieldTripleError, ValueError):
    pass


class OrderOverflow(FieldTripleError, ValueError):
    pass


class SingularLagrangian(FieldTripleError):
    """Momentum map is not invertible; ``directions`` spans the degenerate jets."""

    def __init__(self, message, directions=()):
        super().__init__(message)
        self.directions = list(directions)


class NonQuadratic(FieldTripleError):
    pass


class GridTooSmall(FieldTripleError, ValueError):
    pass


class MissingField(FieldTripleError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NoConvergence(FieldTripleError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ExprSyntaxError(FieldTripleError, SyntaxError):
    """Grammar violation; carries 1-based ``line`` and ``column``."""

    def __init__(self, message, line, column, text=""):
        super().__init__(f"{message} at line {line}, column {column}")
        self.msg = message
        self.lineno = self.line = line
        self.column = self.offset = column
        self.text = text

    def __str__(self):
        return f"{self.msg} at line {self.line}, column {self.column}"


class ArityError(FieldTripleError, ValueError):
    pass


class ModelError(FieldTripleError, ValueError):
    pass
