"""Exception hierarchy for jetvar.

Split in three families so the CLI can map failures to exit codes:
parse-time errors (exit 2), mathematical domain errors (exit 3), and
check-failures which are ordinary return values, not exceptions.
"""


class JetvarError(Exception):
    """Base class for all jetvar errors."""


# ---------------------------------------------------------------------------
# mathematical domain errors


class DomainError(JetvarError):
    """An operation was applied outside its mathematical domain."""


class GeneratorMismatchError(DomainError):
    """Operands reference generators from different theories."""


class UnknownGeneratorError(DomainError):
    """A generator, variable, or component is not declared."""


class GradingError(DomainError):
    """Base for grading-related failures."""


class InhomogeneousExpressionError(GradingError):
    """Expression mixes several gradings where one is required."""

    def __init__(self, gradings):
        self.gradings = tuple(gradings)
        listing = ", ".join(str(g) for g in self.gradings)
        super().__init__(f"expression is not graded-homogeneous: {{{listing}}}")


class ZeroExpressionGradingError(GradingError):
    """Grading of the zero expression is undefined."""


class GradingViolationError(GradingError):
    """A substitution or characteristic does not respect gradings."""


class NonzeroGhostNumberError(GradingError):
    """Evaluation requires a ghost-number-zero density."""


class OddDensityError(GradingError):
    """Evaluation requires an even density."""


class NotADivergenceError(DomainError):
    """A witness was requested for a density that is not a total divergence."""


class UnsupportedDimensionError(DomainError):
    """Operation restricted to one independent variable."""


class ZeroVariablesError(DomainError):
    """The theory declares no independent variables."""


class NotSolvableError(DomainError):
    """An Euler-Lagrange expression cannot be solved for its leading coordinate."""


class RewriteBudgetError(DomainError):
    """On-shell rewriting did not reach a fixed point within the budget."""


class MissingCharacteristicError(DomainError):
    """An evolutionary vector field lacks a characteristic for some component."""


class NotAnIdentityError(DomainError):
    """A declared Noether operator has a nonzero residual."""

    def __init__(self, residual, message="operator is not a Noether identity"):
        self.residual = residual
        super().__init__(message)


class DuplicateGhostNameError(DomainError):
    """A gauge block reuses a generator name."""


class UnboundParameterError(DomainError):
    """A numeric result was requested but parameters remain symbolic."""


# ---------------------------------------------------------------------------
# parse-time errors


class ParseError(JetvarError):
    """Syntax or declaration error with source position."""

    def __init__(self, message, line=None, column=None, expected=None):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected) if expected else ()
        super().__init__(self.describe())

    def describe(self):
        loc = ""
        if self.line is not None:
            loc = f"{self.line}:{self.column}: " if self.column is not None else f"{self.line}: "
        msg = f"{loc}{self.message}"
        if self.expected:
            msg += " (expected " + " or ".join(self.expected) + ")"
        return msg


class UndeclaredIdentifierError(ParseError):
    pass


class IndexRangeError(ParseError):
    pass


class MetricDimensionError(ParseError):
    pass
