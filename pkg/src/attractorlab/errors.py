"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class AttractorLabError(Exception):
    """Base class for all library errors."""


class DomainError(AttractorLabError, ValueError):
    """An argument lies outside the chart where a model formula is valid."""


class ChartExitError(AttractorLabError):
    """An intermediate transversal coordinate left the open unit chart."""


class ContractionViolation(AttractorLabError):
    """A return-map step failed to move the point closer to the polycycle."""


class InvariantViolation(AttractorLabError, ValueError):
    """Model parameters break a structural invariant (for example Lambda <= 1)."""


class StepTooLarge(AttractorLabError):
    """The reference integrator missed its accuracy target for the given step."""


class HorizonError(AttractorLabError):
    """A requested horizon or turn count is outside the supported range."""


class InsufficientEvents(AttractorLabError):
    """A timeline is too short for the requested analysis."""


class InterleavingViolation(AttractorLabError):
    """Two loop seeds do not satisfy the interleaving precondition."""


class ParameterOutOfArc(AttractorLabError, ValueError):
    """A sink parameter lies outside the admissible arc of the circle family."""


class StripOverlapError(AttractorLabError, ValueError):
    """The strip half-width is too large for the configured geometry."""


class StepFailure(AttractorLabError):
    """The adaptive integrator could not complete a segment."""


class HierarchyViolation(AttractorLabError):
    """An attractor estimate broke the minimal/statistical/Milnor nesting."""


class ConfigError(AttractorLabError, ValueError):
    """A scenario configuration is malformed or violates a model invariant."""


class RangeWarning(UserWarning):
    """A model map produced a value outside its asymptotic validity chart."""
