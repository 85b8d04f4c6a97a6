"""Exception hierarchy shared by every module."""


class FilterError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(FilterError, ValueError):
    """An argument violates a documented precondition."""


class NotPSDError(InvalidInputError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""


class ConfigError(InvalidInputError):
    """Invalid run configuration; ``field`` names the offending entry when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class SingularMatrixError(FilterError, ArithmeticError):
    """A matrix required to be strictly positive definite is (numerically) singular."""


class NumericalInstabilityError(FilterError, ArithmeticError):
    """An integrator left the region where its state is well defined."""


class DegenerateEnsembleError(NumericalInstabilityError):
    """The empirical covariance of an ensemble collapsed below the PD floor."""

    def __init__(self, message, step=None, batch_index=None):
        super().__init__(message)
        self.step = step
        self.batch_index = batch_index


class UnsupportedReferenceError(FilterError, ValueError):
    """No closed-form reference exists for the requested filter kind."""


class ReplicationError(FilterError):
    """A single replication of a study failed; carries its seed for reproduction."""

    def __init__(self, message, replication, seed, cause=None):
        super().__init__(message)
        self.replication = replication
        self.seed = seed
        self.cause = cause
