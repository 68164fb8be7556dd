"""Exception hierarchy.

Parameter problems derive from :class:`InvalidArgumentError` (a ``ValueError``)
and map to CLI exit code 2; numerical failures derive from
:class:`NumericalError` and map to exit code 3.
"""


class CavSqueezeError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(CavSqueezeError, ValueError):
    pass


class ExistenceError(InvalidArgumentError):
    """Parameters lie outside the existence region of the requested structure."""


class ResolutionError(InvalidArgumentError):
    """Grid too coarse for the structure it is asked to host."""


class InsufficientDataError(InvalidArgumentError):
    pass


class NumericalError(CavSqueezeError, RuntimeError):
    pass


class DegeneratePairingError(NumericalError):
    """Left/right eigenvector pairing is ambiguous.

    ``clusters`` holds lists of right-mode indices that must be
    biorthonormalized jointly.
    """

    def __init__(self, message, clusters):
        super().__init__(message)
        self.clusters = clusters


class NoCrossingError(NumericalError):
    pass


class NonStationaryError(NumericalError):
    pass


class ClassificationError(NumericalError):
    pass


class BlowUpError(NumericalError):
    pass
