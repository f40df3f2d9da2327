"""Exception hierarchy.

Every error raised by this package derives from :class:`SpectralError`, so
callers can distinguish library failures from programming errors.  The leaf
classes mirror the failure modes of the numerical machinery: grid/shape
mismatches, measure singularities, resolution floors, and operator
preconditions.
"""


class SpectralError(Exception):
    """Base class for all errors raised by spectrakit."""


class NumericDomainError(SpectralError):
    """Samples contain non-finite entries or otherwise leave the numeric domain."""


class GridMismatchError(SpectralError):
    """Two objects that must share a grid do not."""


class DomainError(SpectralError):
    """A point lies outside the interval domain it must belong to."""


class SingularPointError(SpectralError):
    """A density ratio was requested where the denominator measure is singular or null."""


class DegenerateContractionError(SpectralError):
    """A contraction window carries zero mass, so quotients are undefined."""


class ResolutionError(SpectralError):
    """A window or cell shrank below the grid resolution."""


class PositivityError(SpectralError):
    """A partition cell that must carry positive mass does not."""


class AtomlessRequiredError(SpectralError):
    """Differentiation machinery was pointed at a measure with atoms in the window."""


class UnboundedMultiplierError(SpectralError):
    """The domain condition for a multiplier (finite second moment) failed."""


class AbsoluteContinuityError(SpectralError):
    """A correlation measure has mass where its reference measure is null."""


class ExclusionSetError(SpectralError):
    """Evaluation was requested on the null exclusion set of a rigging."""


class ChannelError(SpectralError):
    """A channel index exceeds the local multiplicity."""


class IsoDomainError(SpectralError):
    """The structural isomorphism is not defined for the given data."""


class NotProjectionError(SpectralError):
    """An extracted multiplier or fiber matrix fails the projection test."""


class InapplicableError(SpectralError):
    """A specialization was invoked outside its precondition (commutation, simplicity)."""


class DecompositionError(SpectralError):
    """Extraction of fiberwise operator data failed."""


class ScenarioError(SpectralError):
    """A scenario file failed to parse or validate."""
