"""Exception hierarchy.

Validation problems (bad input, violated preconditions) derive from
:class:`ValidationError`; numerical breakdowns derive from
:class:`NumericalError`.  The CLI maps the two families to exit codes 2 and 3.
"""


class GraphotError(Exception):
    pass


class ValidationError(GraphotError, ValueError):
    pass


class NumericalError(GraphotError, ArithmeticError):
    pass


class GraphValidationError(ValidationError):
    pass


class SchemaError(GraphValidationError):
    """Malformed graph description (missing or unknown keys, bad types)."""


class DuplicateVertexError(GraphValidationError):
    pass


class SelfLoopError(GraphValidationError):
    pass


class UnknownVertexError(GraphValidationError):
    pass


class IsolatedBoundaryError(GraphValidationError):
    """A boundary vertex has no interior neighbour."""


class DisconnectedInteriorError(GraphValidationError):
    pass


class TerminalSetError(GraphValidationError):
    """Sources or receivers empty or not contained in the boundary."""


class SolverError(NumericalError):
    pass


class BoundNotApplicableError(ValidationError):
    """Hypotheses of an error bound are not met."""


class SeriesLengthError(ValidationError):
    pass


class StructureError(ValidationError):
    pass
