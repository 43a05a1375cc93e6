"""Exception hierarchy shared by all modules."""


class SpecidemError(Exception):
    """Base class for every error raised by :mod:`specidem`."""


class DimensionError(SpecidemError, ValueError):
    """Array shapes of an instance do not agree."""


class ZeroVectorError(SpecidemError, ValueError):
    """A perturbation vector ``u_k`` or ``v_k`` is identically zero."""


class CollisionError(SpecidemError, ValueError):
    """An evaluation point is too close to the spectrum or to a curve."""

    def __init__(self, msg, point=None, distance=None):
        super().__init__(msg)
        self.point = point
        self.distance = distance


class SingularCoreError(SpecidemError):
    """The R x R core matrix ``I + Y(z)X(z)`` is numerically singular at ``z``.

    This happens when ``z`` sits on (or very near) an eigenvalue of ``T``.
    """

    def __init__(self, msg, z=None, cond=None):
        super().__init__(msg)
        self.z = z
        self.cond = cond


class QuadratureError(SpecidemError):
    """Adaptive quadrature hit its depth limit before meeting the tolerance.

    The best available estimate and its error indicator are attached.
    """

    def __init__(self, msg, estimate=None, error=None):
        super().__init__(msg)
        self.estimate = estimate
        self.error = error


class NearDefectiveError(SpecidemError):
    """Eigenvalues are too close for eigenprojector-based oracles."""


class GateError(SpecidemError):
    """A summability / decomposability gate rejected the input."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class InstanceFormatError(SpecidemError, ValueError):
    """An instance or bundle file could not be parsed."""
