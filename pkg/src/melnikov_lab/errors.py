"""Exception and warning types shared across the package."""


class MelnikovLabError(Exception):
    """Base class for all errors raised by melnikov_lab."""


class DomainError(MelnikovLabError, ValueError):
    """An argument lies outside the domain of a closed-form expression."""


class StepFailure(MelnikovLabError):
    """The adaptive step size fell below the minimum allowed step."""


class NonFinite(MelnikovLabError, FloatingPointError):
    """A right-hand side or integrand produced NaN or Inf."""


class DegenerateCrossing(MelnikovLabError):
    """A section crossing was found but the flow is (nearly) tangent there."""


class NoUnitEigenvalue(MelnikovLabError):
    """An (adjoint) monodromy matrix has no eigenvalue close to one."""


class ResonanceMismatch(MelnikovLabError):
    """The orbit period does not satisfy ``l * T_orbit == m * T_forcing``."""


class NoResonance(MelnikovLabError):
    """No modulus in the family's range satisfies the resonance relation."""


class NotConverged(MelnikovLabError):
    """A nested-window limit did not settle to the requested tolerance."""


class NewtonDiverged(MelnikovLabError):
    """Newton shooting failed to reduce the periodicity residual."""


class ConfigError(MelnikovLabError):
    """A run configuration failed validation."""


class MultiplicityWarning(UserWarning):
    """The eigenvalue-one eigenspace has dimension larger than one."""


class SingularJacobianWarning(UserWarning):
    """``DP - I`` is numerically singular during Newton shooting."""
