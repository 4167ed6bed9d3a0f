"""Exception hierarchy shared across the package."""


class MFSpinError(Exception):
    """Base class for all package errors."""


class ConfigError(MFSpinError, ValueError):
    """Invalid user configuration (bad key, bad value)."""


class UnknownModel(ConfigError):
    pass


class NonOrthogonal(MFSpinError, ValueError):
    pass


class DimensionOverflow(MFSpinError):
    pass


class ZeroDirection(MFSpinError, ValueError):
    pass


class NoConvergence(MFSpinError):
    """Eigensolver failed; ``diagnostics`` carries solver details."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class WindowTooNarrow(MFSpinError):
    pass


class NoMinimumFound(MFSpinError):
    pass


class NotOnSphere(MFSpinError, ValueError):
    pass


class NotInterior(MFSpinError, ValueError):
    pass


class OutsideTheorem(MFSpinError):
    """Hypotheses of the semiclassical ladder formulas are not met."""


class QuadratureTooCoarse(MFSpinError, ValueError):
    pass


class DegenerateDirections(MFSpinError, ValueError):
    pass


class OutOfRange(MFSpinError, ValueError):
    pass
