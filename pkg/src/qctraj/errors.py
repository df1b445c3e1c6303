"""Exception types shared across the package.

Solvers raise these instead of returning huge or meaningless numbers; the
trajectory continuation layer converts the recoverable ones into per-sample
status flags.
"""


class QCTrajError(Exception):
    """Base class for all package-specific errors."""


class Resonance(QCTrajError):
    """Effective frequency too close to the drive frequency."""


class DegenerateFrequency(QCTrajError):
    """Effective frequency squared too close to zero."""


class SingularHorizon(QCTrajError):
    """sin(omega_eff * T) vanishes: the boundary problem is singular."""


class ConjugatePoint(QCTrajError):
    """Shooting matrix singular: the horizon contains a focal point."""


class NoConvergence(QCTrajError):
    """Newton iteration failed to reach the requested residual."""


class SingularHessian(QCTrajError):
    """A fluctuation determinant crossed zero (discrete conjugate point)."""


class SingularMatrix(QCTrajError):
    """Zero pivot in a tridiagonal elimination."""


class ToleranceNotMet(QCTrajError):
    """Adaptive quadrature hit the depth cap before the tolerance."""


class Unstable(QCTrajError):
    """Wavefunction norm drifted beyond the allowed bound."""


class DomainTooSmall(QCTrajError):
    """Initial packet does not fit inside the spatial grid."""


class AmplitudeDenominatorSmall(QCTrajError):
    """The amplitude-average denominator is too small to trust."""


class ConfigError(QCTrajError):
    """Scenario file invalid; the message carries the offending field path."""


class UnknownExample(QCTrajError):
    """Requested example id is not in the catalog."""
