"""Exception types raised across the toolkit.

Every error carries an ``exit_code`` used by the command-line front end:
2 for malformed input, 3 when a required precondition does not hold.
"""


class MPTError(Exception):
    exit_code = 2


class BadInput(MPTError, ValueError):
    exit_code = 2


class DimMismatch(BadInput):
    pass


class SizeMismatch(BadInput):
    pass


class IndexOutOfRange(BadInput, IndexError):
    pass


class InvalidProbability(BadInput):
    pass


class NonSymmetricP0(BadInput):
    pass


class BlockSizeMismatch(BadInput):
    pass


class NoConvergence(MPTError, ArithmeticError):
    exit_code = 3


class PreconditionViolated(MPTError, ValueError):
    exit_code = 3


class ZeroGap(PreconditionViolated):
    pass


class NonPositiveGap(PreconditionViolated):
    pass


class AllEqual(PreconditionViolated):
    pass


class SpectralDominance(PreconditionViolated):
    pass


class DivergentSeries(PreconditionViolated):
    pass


class KTooLarge(PreconditionViolated):
    pass
