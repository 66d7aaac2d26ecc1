"""Exception hierarchy shared by all modules."""


class EmbeddingError(Exception):
    """Base class for every error raised by the package."""


# arithmetic
class NotPrime(EmbeddingError, ValueError):
    pass


class EvenPrime(EmbeddingError, ValueError):
    pass


class PrecisionTooLow(EmbeddingError, ValueError):
    pass


class RingMismatch(EmbeddingError, ValueError):
    pass


class NotUnit(EmbeddingError, ArithmeticError):
    pass


class NonResidue(EmbeddingError, ArithmeticError):
    pass


class ZeroInput(EmbeddingError, ValueError):
    pass


class DivisionByZero(EmbeddingError, ZeroDivisionError):
    pass


# linear algebra
class ShapeMismatch(EmbeddingError, ValueError):
    pass


class NotInvertible(EmbeddingError, ArithmeticError):
    pass


class PrecisionExhausted(EmbeddingError, ArithmeticError):
    pass


class DegenerateAfterScaling(EmbeddingError, ArithmeticError):
    pass


class NotPerfect(EmbeddingError, ValueError):
    pass


class OddDimension(EmbeddingError, ValueError):
    pass


class NotSquarefreeModEll(EmbeddingError, ArithmeticError):
    pass


# groups
class NotAssociative(EmbeddingError, ValueError):
    pass


class NoIdentity(EmbeddingError, ValueError):
    pass


class NoInverse(EmbeddingError, ValueError):
    pass


class NotInertiaForm(EmbeddingError, ValueError):
    pass


class AuxPrimeSearchFailed(EmbeddingError, RuntimeError):
    pass


class BadAction(EmbeddingError, ValueError):
    pass


# representations
class RelationViolated(EmbeddingError, ValueError):
    pass


class NotStable(EmbeddingError, ValueError):
    pass


class InconclusiveAfterRetries(EmbeddingError, RuntimeError):
    pass


class SplitInconclusive(EmbeddingError, RuntimeError):
    pass


class NotCommutative(EmbeddingError, ArithmeticError):
    pass


class InvolutionEscapesE(EmbeddingError, ArithmeticError):
    pass


class NotIsomorphic(EmbeddingError, ArithmeticError):
    def __init__(self, message, hom_dim_mod_ell=None):
        super().__init__(message)
        self.hom_dim_mod_ell = hom_dim_mod_ell


# symplectic construction
class NotIsomorphicTwist(NotIsomorphic):
    pass


class MultiplierEscapesE0(EmbeddingError, ArithmeticError):
    pass


class NonScalarPower(EmbeddingError, ArithmeticError):
    pass


class NotIntegral(EmbeddingError, ValueError):
    pass


class KernelConditionFails(EmbeddingError, ValueError):
    pass


class FormNotPerfect(EmbeddingError, ValueError):
    pass


class NoUnimodularSolution(EmbeddingError, RuntimeError):
    pass


class DecompositionFailure(EmbeddingError, RuntimeError):
    pass


class ForceRequired(EmbeddingError, ValueError):
    pass


class NotFaithful(EmbeddingError, ValueError):
    pass


class BudgetViolation(EmbeddingError, AssertionError):
    pass


class BadTarget(EmbeddingError, ValueError):
    pass


class UnknownFamily(EmbeddingError, ValueError):
    pass
