"""Exception hierarchy."""


class TwinObsError(Exception):
    """Base class for all errors raised by twinobs."""


class NumericalError(TwinObsError, RuntimeError):
    """A decomposition failed to converge or a verification residual is too large."""


class DimensionError(TwinObsError, ValueError):
    """Operand shapes do not match the factor dimensions."""


class NotAStateError(TwinObsError, ValueError):
    """A matrix is not a valid density operator (Hermitian, positive, unit trace)."""

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class InvariantError(TwinObsError, ValueError):
    """A subspace is not invariant under the supplied antilinear involution."""


class NotATwinError(TwinObsError, ValueError):
    """The supplied operators do not form a twin pair for the state."""


class NotPerfectlyCorrelatedError(NotATwinError):
    """Joint outcome distribution of a supposed twin pair is not a bijection."""


class StrengthError(TwinObsError, ValueError):
    """A strong twin pair was required but the pair is weak or partially strong."""


class PreconditionError(TwinObsError, ValueError):
    """An operation's input precondition is violated."""


class InputError(TwinObsError, ValueError):
    """A JSON input file is malformed or violates its schema."""
