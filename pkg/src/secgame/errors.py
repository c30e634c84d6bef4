"""Exception hierarchy shared across the package."""


class SecGameError(Exception):
    """Base class for every error raised by secgame."""


class ScenarioError(SecGameError):
    """A scenario failed validation.

    ``violations`` holds the full report so callers can print every problem,
    not just the first one.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class UnknownNodeError(ScenarioError, KeyError):
    def __str__(self):
        return self.args[0]


class ParseError(SecGameError):
    """Malformed document text. Carries line/column when known."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(SecGameError):
    """Well-formed document that does not follow the schema."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class SolverError(SecGameError):
    """Numerical failure inside the matrix-game solvers."""


class ConvergenceError(SolverError):
    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class GraphCycleError(SolverError):
    """Raised when an acyclic-only method meets a cycle."""
