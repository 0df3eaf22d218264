"""Exception hierarchy.

Everything the CLI maps to exit code 3 derives from ``NumericalGuardError``;
invalid inputs derive from ``ValueError`` through ``InvalidParameter``.
"""


class CuspflowError(Exception):
    pass


class InvalidParameter(CuspflowError, ValueError):
    """A parameter violates a documented invariant (CLI exit code 2)."""


class NumericalGuardError(CuspflowError, ArithmeticError):
    """A truncation, quadrature or convergence guard tripped (CLI exit code 3)."""


class SingularD(InvalidParameter):
    pass


class UnsupportedLattice(InvalidParameter):
    pass


class PoleError(NumericalGuardError):
    pass


class PoleAtOne(PoleError):
    pass


class PoleHit(PoleError):
    pass


class PoleInDenominator(PoleError):
    pass


class NonTermination(NumericalGuardError):
    pass


class TruncationFailure(NumericalGuardError):
    pass


class QuadratureBudgetExceeded(NumericalGuardError):
    pass


class StepSizeUnderflow(NumericalGuardError):
    pass


class InsufficientSupport(InvalidParameter):
    pass


class ProposalMismatch(NumericalGuardError):
    pass


class DegenerateSupportWarning(UserWarning):
    """Support of a bump too short for two unit ramps; a centered bump is used."""
