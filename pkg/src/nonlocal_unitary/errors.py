"""Exception hierarchy.

Every error raised by the package derives from :class:`NonlocalUnitaryError`
so callers (and the CLI) can map failures to exit codes by category.
"""


class NonlocalUnitaryError(Exception):
    """Base class for all package errors."""


class ContractViolation(NonlocalUnitaryError):
    """Input violates an operation's precondition (CLI exit code 3)."""


class InvalidMatrix(ContractViolation, ValueError):
    pass


class ShapeError(ContractViolation, ValueError):
    pass


class NotHermitian(ContractViolation):
    pass


class NotUnitary(ContractViolation):
    pass


class NotInvertible(ContractViolation):
    pass


class NotSimultaneouslyDiagonalizable(ContractViolation):
    pass


class NoSimultaneousSVD(ContractViolation):
    pass


class RankTooHigh(ContractViolation):
    pass


class WitnessResidualTooLarge(ContractViolation):
    pass


class BadBlockSupport(ContractViolation):
    pass


class InvalidDimension(ContractViolation, ValueError):
    pass


class InvalidBipartition(ContractViolation, ValueError):
    pass


class InvalidControlledForm(ContractViolation):
    pass


class UnsupportedShape(ContractViolation):
    pass


class InternalContractViolation(NonlocalUnitaryError):
    """A computed intermediate broke an invariant; tolerances are too tight
    for the input's conditioning."""


class TheoremViolationReport(NonlocalUnitaryError):
    """A numerical result contradicts a proven structural statement
    (CLI exit code 4). Never swallowed."""


class MatrixFileError(NonlocalUnitaryError, ValueError):
    """Malformed matrix, state or witness file (CLI exit code 2)."""
