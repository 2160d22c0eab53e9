# core/exceptions.py
"""Exception hierarchy shared by every simulation app."""


class DephasingError(Exception):
    """
    Base class for all errors raised by the simulation apps.

    Attributes:
        diagnostics (dict): Numbers that help locate the failure (residuals,
            step counts, excluded fractions). Written to run manifests.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class GridMismatchError(DephasingError):
    """Two fields that must share a radial grid do not."""


class InvalidFieldError(DephasingError, ValueError):
    """A field has the wrong length or non-finite samples."""


class PhysicalDomainError(DephasingError, ValueError):
    """Inputs lie outside the domain where an operation is defined."""


class NumericalFailure(DephasingError):
    """A numerical procedure failed at run time."""


class InstabilityError(NumericalFailure):
    """Norm drift beyond tolerance during real-time evolution."""


class ConvergenceError(NumericalFailure):
    """An iterative procedure did not converge."""


class ResonanceError(NumericalFailure):
    """Too much of the condensate volume sits on near-singular nodes."""


class CollapseError(NumericalFailure):
    """The condensate radius fell below its floor."""


class FitError(NumericalFailure):
    """A least-squares fit could not be performed or is too poor."""
