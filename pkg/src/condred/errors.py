"""Exception hierarchy shared across the package.

Everything raised on purpose derives from CondredError so callers (and the
CLI) can distinguish "your input is bad" from "the computation went bad"
from a genuine bug.
"""


class CondredError(Exception):
    """Base class for all deliberate errors raised by this package."""


class ConfigError(CondredError):
    """Malformed, unknown, or out-of-range configuration input."""


class NumericalError(CondredError):
    """A numerical procedure left its domain of validity."""


class CausticError(NumericalError):
    """The ray map lost injectivity (Jacobian under the floor)."""


class NewtonError(NumericalError):
    """Ray-map inversion failed to converge."""


class DecayError(NumericalError):
    """A field no longer decays at the grid boundary or in mode space."""


class StepSizeError(NumericalError):
    """Requested time step violates the stability/oscillation cap."""
