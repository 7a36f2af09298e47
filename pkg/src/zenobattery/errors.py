"""Exception hierarchy shared by all zenobattery modules."""


class ZenoBatteryError(Exception):
    """Base class for every error raised by this package."""


class NumericalError(ZenoBatteryError):
    """A linear-algebra or simulation step could not be carried out."""


class NotHermitianError(NumericalError, ValueError):
    pass


class NoConvergenceError(NumericalError):
    pass


class DimensionMismatchError(NumericalError, ValueError):
    pass


class IndexOutOfRangeError(ZenoBatteryError, IndexError):
    pass


class ParameterError(ZenoBatteryError, ValueError):
    """Physical parameters violate their invariants."""


class ScheduleError(ZenoBatteryError, ValueError):
    """Empty schedule, non-positive duration or interval."""


class RegimeMismatchError(ZenoBatteryError, ValueError):
    """Battery frequency does not satisfy the resonance of the requested regime."""


class TooFewSamplesError(ZenoBatteryError, ValueError):
    pass


class TooFewPointsError(ZenoBatteryError, ValueError):
    pass


class TooFewValleysError(ZenoBatteryError, ValueError):
    pass


class ConfigError(ZenoBatteryError, ValueError):
    """Malformed run configuration; the message names the offending line or key."""
