"""Exception and warning types shared across the package."""


class HidaInterpError(Exception):
    """Base class for all package errors."""


class VerificationFailure(HidaInterpError):
    """A numerical or exact check did not hold."""


# exact_arith
class NonSimpleRoot(HidaInterpError):
    pass


# modsym
class UnsupportedRing(HidaInterpError):
    pass


class NonInvertibleLevel(HidaInterpError):
    pass


class Char2Unsupported(HidaInterpError):
    pass


class EmptyEigenspace(HidaInterpError):
    pass


class SaturationFailure(HidaInterpError):
    pass


class NoStabilization(HidaInterpError):
    pass


class PrecisionExceedsLevel(HidaInterpError):
    pass


class NotDivisible(HidaInterpError):
    pass


class NotCuspidal(HidaInterpError):
    pass


class DegeneratePairing(HidaInterpError):
    pass


# qexp_analytic
class InsufficientTruncation(HidaInterpError):
    pass


class SlowConvergence(HidaInterpError):
    pass


class ResidualTooLarge(VerificationFailure):
    pass


# stabilize
class NotEigen(VerificationFailure):
    pass


# local_factors
class UnknownBadFactor(HidaInterpError):
    pass


class IdentityFailed(VerificationFailure):
    pass


# padic_measures
class NotOrdinary(HidaInterpError):
    pass


class DistributionViolation(VerificationFailure):
    pass


class ConductorTooLarge(HidaInterpError):
    pass


class ConductorGateViolation(HidaInterpError):
    pass


class IntegralityWarning(UserWarning):
    """Emitted when some bad prime l has p | l-1 and a non-trivial local type."""


# interp_compare
class NonAlgebraicRatio(VerificationFailure):
    pass


class SimplificationMismatch(VerificationFailure):
    pass


# family_finite
class CongruenceFailure(VerificationFailure):
    pass


class TraceMismatch(VerificationFailure):
    pass
