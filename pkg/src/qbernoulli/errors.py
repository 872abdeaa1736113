"""Exception types shared across the package."""


class QBernoulliError(Exception):
    """Base class for package errors."""


class ConfigError(QBernoulliError):
    """Invalid configuration (bad parameter values, unknown keys, ...)."""


class NumericalCorruptionError(QBernoulliError):
    """The state vector has lost normalization beyond recoverable bounds."""


class ProtocolError(QBernoulliError):
    """An operation was applied out of protocol order (precondition broken)."""


class FitConvergenceError(QBernoulliError):
    """A scaling fit failed to converge or too many resamples diverged."""
