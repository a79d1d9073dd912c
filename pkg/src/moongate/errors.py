"""Exception types shared across the toolkit."""


class MoongateError(Exception):
    """Base class for all toolkit errors."""


class EphemerisRangeError(MoongateError):
    """Epoch outside the span covered by a state table."""


class TableFormatError(MoongateError):
    """A state-table document violates the CSV schema."""


class SingularStateError(MoongateError, ValueError):
    """State outside the representable set (retrograde-singular or degenerate)."""


class PropagationError(MoongateError):
    """Integrator failure: step underflow or non-finite state."""


class PropellantExhaustedError(PropagationError):
    """Mass ratio reached zero before the arc ended."""


class NoTransitionError(MoongateError):
    """Two-arc propagation never crossed the attractor switching sphere."""


class ConfigError(MoongateError):
    """Scenario configuration rejected; message names the offending key."""
