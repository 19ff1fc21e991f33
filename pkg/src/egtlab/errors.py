"""Exception types shared across the package."""


class EgtLabError(Exception):
    """Base class for all errors raised by egtlab."""


class InvalidParameterError(EgtLabError, ValueError):
    """A parameter violates the precondition of an operation."""


class StructuralError(EgtLabError):
    """A data structure is malformed (missing table entry, isolated node, ...)."""


class NumericalError(EgtLabError, ArithmeticError):
    """A numerical routine failed to converge or produced an unusable result."""


class DegenerateSampleError(NumericalError):
    """Too many measure-zero degenerate samples were drawn."""
