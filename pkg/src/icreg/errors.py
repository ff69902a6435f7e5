"""Exception and warning types shared across the package."""


class DataError(Exception):
    """Malformed or unusable input data (bad CSV, impossible split, ...)."""


class UsageError(Exception):
    """Invalid configuration or command-line usage."""


class ExternalPredictorError(Exception):
    """The external predictor child process misbehaved (protocol, timeout, exit)."""


class ClampWarning(UserWarning):
    """A value outside its expected range was clamped instead of rejected."""
