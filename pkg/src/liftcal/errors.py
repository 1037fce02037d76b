"""Exception types shared across the package."""


class LiftcalError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(LiftcalError):
    """Syntax error in a program file, feature expression, or abstraction spec."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class UndeclaredFeature(ParseError):
    """An identifier was used that is not declared in the feature space."""

    def __init__(self, name, line=None, col=None):
        self.name = name
        super().__init__(f"undeclared feature: {name}", line, col)


class SemanticError(LiftcalError):
    """Well-formed input that violates a semantic precondition."""
