"""Exception types raised by the library."""


class Ancf14Error(Exception):
    """Base class for all library-specific errors."""


class InflectionPointError(Ancf14Error):
    """Serret-Frenet frame is undefined: ||r' x r''|| below tolerance."""


class AntipodalTangentError(Ancf14Error):
    """Consecutive tangents are (nearly) opposite; the minimal rotation
    between them is ill-defined.  Usually means stations/steps too coarse."""


class DerivativeSingularityError(Ancf14Error):
    """Rotation-angle derivative blows up (tangents nearly parallel or
    antiparallel within the derivative tolerance)."""


class DegenerateTangentError(Ancf14Error):
    """Center-line tangent has collapsed (||r'|| ~ 0); modeling error."""


class DomainError(Ancf14Error):
    """Coordinate outside the element domain [0, l]."""


class JointConfigError(Ancf14Error):
    """Ill-posed joint definition (e.g. zero-length axis vector)."""


class ModelError(Ancf14Error):
    """Inconsistent model definition (bad node refs, invalid section, ...)."""


class NonConvergence(Ancf14Error):
    """Newton iteration failed to converge."""

    def __init__(self, step, iteration, residual, message=None):
        self.step = step
        self.iteration = iteration
        self.residual = residual
        super().__init__(
            message
            or f"Newton failed at step {step}, iteration {iteration}: "
            f"residual {residual:.3e}"
        )


class ConstraintDriftError(Ancf14Error):
    """Constraint residual exceeded tolerance after an accepted step."""


class IndefiniteError(Ancf14Error):
    """Projected tangent stiffness has significant negative eigenvalues."""
