"""Exception and warning types raised across the package."""

from __future__ import annotations


class CidimError(Exception):
    """Base class for all computation errors raised by cidim."""


class InputError(CidimError):
    """Malformed or inconsistent user input."""


class NotSymmetric(InputError):
    def __init__(self, deviation: float, allowed: float):
        self.deviation = float(deviation)
        self.allowed = float(allowed)
        super().__init__(
            f"matrix is not symmetric: max |S - S^T| = {deviation:.3e} exceeds {allowed:.3e}"
        )


class NotPSD(InputError):
    def __init__(self, min_eig: float, allowed: float):
        self.min_eig = float(min_eig)
        self.allowed = float(allowed)
        super().__init__(
            f"matrix is not positive semidefinite: smallest eigenvalue {min_eig:.6e} "
            f"is below -{allowed:.3e}"
        )


class DimensionMismatch(InputError):
    pass


class ProblemSpecError(InputError):
    """Problem file could not be parsed; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class SpectrumOutOfRange(CidimError):
    def __init__(self, value: float, limit: float):
        self.value = float(value)
        super().__init__(
            f"canonical correlation {value:.12g} exceeds 1 + {limit:.1e}; "
            "the joint covariance is not a valid PSD matrix"
        )


class InternalInconsistency(CidimError):
    pass


class ConsistencyError(CidimError):
    pass


class InfeasibleEpsilon(CidimError):
    pass


class InfeasibleBudget(CidimError):
    pass


class NotPairDecomposable(CidimError):
    pass


class SingularBlock(CidimError):
    pass


class BlockTooLarge(CidimError):
    pass


class InfeasibleDims(CidimError):
    pass


class UnknownFigure(InputError):
    pass


class NonConvergenceWarning(RuntimeWarning):
    pass


class DegenerateVarianceWarning(RuntimeWarning):
    pass
